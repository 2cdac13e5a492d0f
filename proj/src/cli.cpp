#include "klnmf/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <numeric>
#include <ostream>

#include <CLI11.hpp>

#include "klnmf/klnmf.hpp"

namespace klnmf::cli {

namespace {

using io::Corpus;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_short(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

/// max |a - b| / max(1, |b|)
double deviation(const Matrix<double>& a, const Matrix<double>& b) {
  return ((a - b).array().abs() / b.array().abs().max(1.0)).maxCoeff();
}

/// "F" broadcast to K entries, or "F1,F2,..." with exactly K entries.
Vector<double> parse_list(const std::string& text, Index K, const char* flag) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string tok = text.substr(start, comma - start);
    double v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw UsageError(std::string(flag) + ": cannot parse '" + tok + "' as a number");
    }
    values.push_back(v);
    start = comma + 1;
  }
  if (values.size() == 1) return Vector<double>::Constant(K, values[0]);
  if (static_cast<Index>(values.size()) != K) {
    throw UsageError(std::string(flag) + " has " + std::to_string(values.size()) + " entries, K=" +
                     std::to_string(K));
  }
  return Eigen::Map<Vector<double>>(values.data(), K);
}

// ---------------------------------------------------------------- compare

// Run without the entry floor: the both-simplex update renormalizes the
// floored H and the W-simplex update does not, which breaks the exact scaling.
void compare_alg4_alg5(const Corpus& X, const CompareOptions& o, CompareReport& report) {
  const StepOptions opts{0.0, o.threads};
  const auto f5_init = random_factorization(X, o.topics, ConstraintMode::BothSimplex, o.seed);
  const FactorPair<double> c1 = map_c2_to_c1(X, f5_init.W(), f5_init.H());
  Factorization<double> f4(c1.W, c1.H, ConstraintMode::WSimplex);
  Factorization<double> f5 = f5_init;
  double dev_w = 0, dev_h = 0;
  for (int n = 0; n < o.iters; ++n) {
    f4 = mu_step_joint_wnorm(X, f4, opts).model;
    f5 = mu_step_joint_bothnorm(X, f5, opts).model;
    dev_w = std::max(dev_w, deviation(f4.W(), f5.W()));
    dev_h = std::max(dev_h, deviation(map_c1_to_c2(X, f4.W(), f4.H()).H, f5.H()));
  }
  report.checks.push_back({"max_dev_W", dev_w, o.tol});
  report.checks.push_back({"max_dev_H_over_lambda", dev_h, o.tol});
}

void compare_sparse_plain(const Corpus& X, const CompareOptions& o, CompareReport& report) {
  const StepOptions opts{1e-12, o.threads};
  Factorization<double> plain = random_factorization(X, o.topics, ConstraintMode::WSimplex, o.seed);
  Factorization<double> sparse = plain;
  const double offset = std::log1p(o.lambda) * X.total();
  double dev_w = 0, dev_h = 0, dev_obj = 0;
  for (int n = 0; n < o.iters; ++n) {
    const auto ss = mu_step(Method::Sparse, X, sparse, o.lambda, opts);
    plain = mu_step(Method::MuJoint, X, plain, 0.0, opts).model;
    sparse = ss.model;
    const auto mapped = map_sparse_solution(plain.W(), plain.H(), o.lambda, Direction::Forward);
    dev_w = std::max(dev_w, deviation(sparse.W(), mapped.W));
    dev_h = std::max(dev_h, deviation(sparse.H(), mapped.H));
    const double gap = ss.objective - kl_divergence(X, plain);
    dev_obj = std::max(dev_obj, std::abs(gap - offset) / std::max(1.0, std::abs(offset)));
  }
  // Supports compared at the final iterate.
  const auto support = [](const Matrix<double>& H) {
    Matrix<bool> s(H.rows(), H.cols());
    for (Index d = 0; d < H.cols(); ++d) {
      const double level = 1e-10 * H.col(d).maxCoeff();
      for (Index k = 0; k < H.rows(); ++k) s(k, d) = H(k, d) > level;
    }
    return s;
  };
  const Matrix<bool> s_plain = support(plain.H());
  const Matrix<bool> s_sparse = support(sparse.H());
  double mismatches = 0;
  for (Index i = 0; i < s_plain.size(); ++i) mismatches += s_plain.data()[i] != s_sparse.data()[i];
  report.checks.push_back({"max_dev_W", dev_w, o.tol});
  report.checks.push_back({"max_dev_H_scaled", dev_h, o.tol});
  report.checks.push_back({"max_dev_objective_offset", dev_obj, 1e-10});
  report.checks.push_back({"support_mismatches", mismatches, 0});
}

void compare_gap_lda(const Corpus& X, const CompareOptions& o, CompareReport& report) {
  const StepOptions opts{1e-12, o.threads};
  const auto priors = Priors<double>::uniform(o.topics, o.alpha, o.rate_a);
  const Matrix<double> W0 = random_topics<double>(X.n_terms(), o.topics, o.seed);
  const Matrix<double> beta0 = default_beta(X, priors);
  Matrix<double> W_lda = W0, W_gap = W0;
  VariationalState<double> lda(beta0);
  VariationalState<double> gap = map_gap_lda_state(lda, priors, Direction::Forward);
  double dev_w = 0, dev_beta = 0, dev_b = 0;
  for (int n = 0; n < o.iters; ++n) {
    auto sl = dp_vi_step(X, W_lda, priors, lda, opts);
    auto sg = gap_vi_step(X, W_gap, priors, gap, opts);
    W_lda = std::move(sl.W);
    W_gap = std::move(sg.W);
    lda = std::move(sl.state);
    gap = std::move(sg.state);
    dev_w = std::max(dev_w, deviation(W_gap, W_lda));
    dev_beta = std::max(dev_beta, deviation(gap.beta, lda.beta));
    dev_b = std::max(dev_b, (gap.b_rate->array() - (1.0 + o.rate_a)).abs().maxCoeff());
  }
  report.checks.push_back({"max_dev_W", dev_w, o.tol});
  report.checks.push_back({"max_dev_beta", dev_beta, o.tol});
  report.checks.push_back({"max_dev_b_minus_1_plus_a", dev_b, o.tol});
}

void compare_plsa_ref(const Corpus& X, const CompareOptions& o, CompareReport& report) {
  const StepOptions opts{1e-12, o.threads};
  Factorization<double> f = random_factorization(X, o.topics, ConstraintMode::BothSimplex, o.seed);
  reference::PlsaState<double> ref{f.W(), f.H()};
  double dev_w = 0, dev_h = 0;
  for (int n = 0; n < o.iters; ++n) {
    f = mu_step_joint_bothnorm(X, f, opts).model;
    ref = reference::plsa_em_step(X, ref.W, ref.H, opts.epsilon_floor);
    dev_w = std::max(dev_w, deviation(f.W(), ref.W));
    dev_h = std::max(dev_h, deviation(f.H(), ref.H));
  }
  report.checks.push_back({"max_dev_W", dev_w, o.tol});
  report.checks.push_back({"max_dev_H", dev_h, o.tol});
}

// ---------------------------------------------------------------- commands

struct FitArgs {
  std::string input, method, output, trace, alpha, rate_a;
  Index topics = 0;
  double lambda = 0;
  int max_iter = 1000;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  int threads = 1;
  bool has_lambda = false, has_alpha = false, has_rate_a = false;
};

io::TraceRecord trace_record(const FitTrace& t) { return {t.initial_objective, t.objective, t.recon_evals}; }

int run_fit(const FitArgs& a, std::ostream& out) {
  const Method method = parse_method(a.method);
  if (method == Method::Sparse && !a.has_lambda) throw UsageError("--method sparse requires --lambda");
  if (method != Method::Sparse && a.has_lambda) throw UsageError("--lambda only applies to --method sparse");
  if (!is_variational(method) && a.has_alpha) throw UsageError("--alpha only applies to lda and gap");
  if (method != Method::Gap && a.has_rate_a) throw UsageError("--rate-a only applies to gap");

  FitConfig config;
  config.method = method;
  config.n_topics = a.topics;
  config.max_iters = a.max_iter;
  config.rel_tolerance = a.tol;
  config.seed = a.seed;
  config.lambda_sparsity = a.lambda;
  config.threads = a.threads;
  config.validate();

  const Corpus X = io::load_matrix_market(a.input);
  const Index K = a.topics;
  io::ModelFile model;
  model.method = method;
  model.V = X.n_terms();
  model.D = X.n_docs();
  model.K = K;
  model.constraint_mode = constraint_mode_for(method);
  model.lambda = method == Method::Sparse ? a.lambda : 0.0;
  FitTrace trace;

  if (is_variational(method)) {
    const Vector<double> alpha = a.has_alpha ? parse_list(a.alpha, K, "--alpha") : Vector<double>::Constant(K, 1.0 / K);
    Vector<double> rate;
    if (method == Method::Gap) rate = a.has_rate_a ? parse_list(a.rate_a, K, "--rate-a") : Vector<double>::Ones(K);
    const Priors<double> priors(alpha, rate);
    auto result = fit_vi(X, config, priors, random_topics<double>(X.n_terms(), K, a.seed), default_beta(X, priors));
    model.W = std::move(result.W);
    model.beta = result.state.beta;
    model.b_rate = result.state.b_rate;
    model.alpha = alpha;
    model.rate_a = rate;
    trace = std::move(result.trace);
  } else {
    auto init = random_factorization(X, K, constraint_mode_for(method), a.seed);
    auto result = fit(X, config, init);
    model.W = result.model.W();
    model.H = result.model.H();
    trace = std::move(result.trace);
  }
  model.objective = trace.objective.empty() ? trace.initial_objective : trace.objective.back();
  model.trace = trace_record(trace);
  io::save_model(a.output, model);
  if (!a.trace.empty()) io::write_trace_csv(a.trace, trace);

  out << "method " << to_string(method) << "\n"
      << "iterations " << trace.size() << "\n"
      << "converged " << (trace.converged ? "yes" : "no") << "\n"
      << (is_variational(method) ? "elbo " : "objective ") << fmt(model.objective) << "\n";
  return kExitOk;
}

int run_topics(const std::string& model_path, const std::string& vocab_path, int top, std::ostream& out) {
  if (top < 1) throw UsageError("--top must be >= 1");
  const io::ModelFile model = io::load_model(model_path);
  const io::Vocabulary vocab = io::load_vocabulary(vocab_path);
  if (vocab.size() != model.V) {
    throw DataError("dimension mismatch: vocabulary has " + std::to_string(vocab.size()) + " terms, V=" +
                    std::to_string(model.V));
  }
  const Index n = std::min<Index>(top, model.V);
  std::vector<Index> order(static_cast<std::size_t>(model.V));
  for (Index k = 0; k < model.K; ++k) {
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return model.W(a, k) > model.W(b, k); });
    out << "topic " << k << ":";
    for (Index i = 0; i < n; ++i) out << " " << vocab.terms[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    out << "\n";
  }
  return kExitOk;
}

int run_eval(const std::string& model_path, const std::string& input, std::ostream& out) {
  const io::ModelFile m = io::load_model(model_path);
  const Corpus X = io::load_matrix_market(input);
  if (X.n_terms() != m.V || X.n_docs() != m.D) {
    throw DataError("dimension mismatch: matrix is " + std::to_string(X.n_terms()) + "x" +
                    std::to_string(X.n_docs()) + ", model has V=" + std::to_string(m.V) + ", D=" +
                    std::to_string(m.D));
  }
  switch (m.method) {
    case Method::Mu:
    case Method::MuJoint: out << "kl " << fmt(kl_divergence(X, m.W, *m.H)) << "\n"; break;
    case Method::Sparse:
      out << "kl " << fmt(kl_divergence(X, m.W, *m.H)) << "\n"
          << "penalized_kl " << fmt(penalized_kl(X, m.W, *m.H, m.lambda)) << "\n";
      break;
    case Method::Plsa:
      out << "kl " << fmt(kl_divergence(X, m.W, *m.H)) << "\n"
          << "plsa_loglik " << fmt(plsa_log_likelihood(X, m.W, *m.H)) << "\n";
      break;
    case Method::Lda:
      out << "elbo " << fmt(lda_elbo(X, m.W, Priors<double>(m.alpha), VariationalState<double>(*m.beta))) << "\n";
      break;
    case Method::Gap:
      out << "elbo "
          << fmt(gap_elbo(X, m.W, Priors<double>(m.alpha, m.rate_a), VariationalState<double>(*m.beta, m.b_rate)))
          << "\n";
      break;
  }
  return kExitOk;
}

int run_compare_command(const std::string& input, const CompareOptions& o, std::ostream& out) {
  const Corpus X = io::load_matrix_market(input);
  const CompareReport report = run_compare(X, o);
  out << "pair " << o.pair << " seed " << o.seed << " iters " << o.iters << "\n";
  for (const auto& c : report.checks) {
    out << c.name << " " << fmt_short(c.value) << " tol " << fmt_short(c.tolerance) << " "
        << (c.pass() ? "ok" : "FAIL") << "\n";
  }
  out << "result " << (report.pass() ? "pass" : "fail") << "\n";
  return report.pass() ? kExitOk : kExitNumerical;
}

}  // namespace

bool CompareReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CompareCheck& c) { return c.pass(); });
}

CompareReport run_compare(const Corpus& X, const CompareOptions& o) {
  if (o.iters < 1) throw UsageError("--iters must be >= 1");
  if (!(o.tol >= 0)) throw UsageError("--tol must be >= 0");
  if (o.topics < 1) throw UsageError("--topics must be >= 1");
  if (o.threads < 1) throw UsageError("--threads must be >= 1");
  CompareReport report;
  if (o.pair == "alg4-alg5") {
    compare_alg4_alg5(X, o, report);
  } else if (o.pair == "sparse-plain") {
    if (!(o.lambda > 0)) throw UsageError("--lambda must be > 0");
    compare_sparse_plain(X, o, report);
  } else if (o.pair == "gap-lda") {
    if (!(o.alpha > 0) || !(o.rate_a > 0)) throw UsageError("--alpha and --rate-a must be > 0");
    compare_gap_lda(X, o, report);
  } else if (o.pair == "plsa-ref") {
    compare_plsa_ref(X, o, report);
  } else {
    throw UsageError("unknown pair '" + o.pair + "'");
  }
  return report;
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topic models as KL-divergence matrix factorization", "klnmf"};
  app.require_subcommand(1);

  std::string corpus, out_matrix, out_vocab;
  int min_count = 1;
  auto* ingest = app.add_subcommand("ingest", "Build a term-document matrix from a directory of text files");
  ingest->add_option("--corpus", corpus, "Directory with one document per file")->required();
  ingest->add_option("--min-count", min_count, "Drop terms with fewer total occurrences")->required();
  ingest->add_option("--out-matrix", out_matrix, "MatrixMarket output")->required();
  ingest->add_option("--out-vocab", out_vocab, "Vocabulary output, one term per line")->required();

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model");
  fit_cmd->add_option("--input", fa.input, "MatrixMarket term-document matrix")->required();
  fit_cmd->add_option("--method", fa.method, "Algorithm")
      ->required()
      ->check(CLI::IsMember({"mu", "mu-joint", "plsa", "lda", "gap", "sparse"}));
  fit_cmd->add_option("--topics", fa.topics, "Number of topics K")->required()->check(CLI::PositiveNumber);
  auto* alpha_opt = fit_cmd->add_option("--alpha", fa.alpha, "Dirichlet/Gamma shape (value or comma list)");
  auto* rate_opt = fit_cmd->add_option("--rate-a", fa.rate_a, "Gamma prior rate (value or comma list)");
  auto* lambda_opt = fit_cmd->add_option("--lambda", fa.lambda, "l1 weight for --method sparse");
  fit_cmd->add_option("--max-iter", fa.max_iter, "Iteration cap")->capture_default_str();
  fit_cmd->add_option("--tol", fa.tol, "Relative objective change stopping threshold")->capture_default_str();
  fit_cmd->add_option("--seed", fa.seed, "Initialization seed")->capture_default_str();
  fit_cmd->add_option("--output", fa.output, "Model JSON output")->required();
  fit_cmd->add_option("--trace", fa.trace, "Per-iteration CSV output");
  fit_cmd->add_option("--threads", fa.threads, "Worker threads")->capture_default_str();

  std::string model_path, vocab_path, eval_input;
  int top = 10;
  auto* topics = app.add_subcommand("topics", "Print the top terms of each topic");
  topics->add_option("--model", model_path)->required();
  topics->add_option("--vocab", vocab_path)->required();
  topics->add_option("--top", top)->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a model on a matrix");
  eval->add_option("--model", model_path)->required();
  eval->add_option("--input", eval_input)->required();

  CompareOptions co;
  std::string compare_input;
  auto* compare = app.add_subcommand("compare", "Run a matched-initialization equivalence check");
  compare->add_option("--input", compare_input)->required();
  compare->add_option("--pair", co.pair)
      ->required()
      ->check(CLI::IsMember({"alg4-alg5", "sparse-plain", "gap-lda", "plsa-ref"}));
  compare->add_option("--seed", co.seed)->capture_default_str();
  compare->add_option("--iters", co.iters)->capture_default_str();
  compare->add_option("--tol", co.tol, "Per-entry iterate tolerance")->capture_default_str();
  compare->add_option("--topics", co.topics)->capture_default_str();
  compare->add_option("--lambda", co.lambda)->capture_default_str();
  compare->add_option("--alpha", co.alpha)->capture_default_str();
  compare->add_option("--rate-a", co.rate_a)->capture_default_str();
  compare->add_option("--threads", co.threads)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*ingest) {
      auto result = io::ingest_corpus(corpus, min_count);
      io::save_matrix_market(out_matrix, result.matrix);
      io::save_vocabulary(out_vocab, result.vocab);
      out << "documents " << result.matrix.n_docs() << "\nterms " << result.matrix.n_terms() << "\nnonzeros "
          << result.matrix.nnz() << "\n";
      return kExitOk;
    }
    if (*fit_cmd) {
      fa.has_lambda = lambda_opt->count() > 0;
      fa.has_alpha = alpha_opt->count() > 0;
      fa.has_rate_a = rate_opt->count() > 0;
      return run_fit(fa, out);
    }
    if (*topics) return run_topics(model_path, vocab_path, top, out);
    if (*eval) return run_eval(model_path, eval_input, out);
    if (*compare) return run_compare_command(compare_input, co, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace klnmf::cli
