#include "klnmf/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "klnmf/error.hpp"

namespace klnmf::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw DataError("error while reading " + path.string());
  return buf.str();
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << contents;
  out.flush();
  if (!out) throw DataError("error while writing " + path.string());
}

namespace {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

template <typename T>
bool parse_number(const std::string& tok, T& out) {
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

Corpus parse_matrix_market(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw DataError("malformed header: empty file");
  ++line_no;
  const auto banner = split_ws(lower(line));
  if (banner.size() != 5 || banner[0] != "%%matrixmarket" || banner[1] != "matrix" || banner[2] != "coordinate" ||
      (banner[3] != "real" && banner[3] != "integer") || banner[4] != "general") {
    throw DataError("malformed header: expected '%%MatrixMarket matrix coordinate real general'");
  }

  long long rows = 0, cols = 0, nnz = 0;
  bool have_size = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%' || is_blank(line)) continue;
    const auto toks = split_ws(line);
    if (toks.size() != 3 || !parse_number(toks[0], rows) || !parse_number(toks[1], cols) ||
        !parse_number(toks[2], nnz) || rows <= 0 || cols <= 0 || nnz < 0) {
      throw DataError("malformed size line at line " + std::to_string(line_no));
    }
    have_size = true;
    break;
  }
  if (!have_size) throw DataError("malformed header: missing size line");

  std::vector<Corpus::Entry> entries;
  entries.reserve(static_cast<std::size_t>(nnz));
  std::set<std::pair<long long, long long>> seen;
  long long read = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '%' || is_blank(line)) continue;
    const auto toks = split_ws(line);
    long long v = 0, d = 0;
    double value = 0;
    if (toks.size() != 3 || !parse_number(toks[0], v) || !parse_number(toks[1], d) ||
        !parse_number(toks[2], value)) {
      throw DataError("malformed entry at line " + std::to_string(line_no));
    }
    if (v < 1 || v > rows || d < 1 || d > cols) {
      throw DataError("index overflow at line " + std::to_string(line_no) + ": (" + std::to_string(v) + ", " +
                      std::to_string(d) + ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    if (!std::isfinite(value)) throw DataError("non-finite count at line " + std::to_string(line_no));
    if (value < 0) throw DataError("negative count at line " + std::to_string(line_no));
    if (!seen.emplace(v, d).second) {
      throw DataError("duplicate entry (" + std::to_string(v) + ", " + std::to_string(d) + ") at line " +
                      std::to_string(line_no));
    }
    if (++read > nnz) throw DataError("more entries than declared at line " + std::to_string(line_no));
    if (value > 0) entries.push_back({static_cast<Index>(v - 1), static_cast<Index>(d - 1), value});
  }
  if (read != nnz) {
    throw DataError("expected " + std::to_string(nnz) + " entries, found " + std::to_string(read));
  }
  Corpus X(static_cast<Index>(rows), static_cast<Index>(cols), entries);
  std::string empty;
  for (Index d = 0; d < X.n_docs(); ++d) {
    if (X.column_sums()(d) > 0) continue;
    if (!empty.empty()) empty += ", ";
    empty += std::to_string(d + 1);
  }
  if (!empty.empty()) throw DataError("empty documents (no counts) in columns: " + empty);
  return X;
}

Corpus load_matrix_market(const fs::path& path) {
  try {
    return parse_matrix_market(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_matrix_market(const Corpus& X) {
  std::string out = "%%MatrixMarket matrix coordinate real general\n";
  out += std::to_string(X.n_terms()) + " " + std::to_string(X.n_docs()) + " " + std::to_string(X.nnz()) + "\n";
  for (Index d = 0; d < X.n_docs(); ++d) {
    for (Index s = X.doc_begin(d); s < X.doc_begin(d + 1); ++s) {
      out += std::to_string(X.slot_term(s) + 1) + " " + std::to_string(d + 1) + " " + format_double(X.slot_count(s)) +
             "\n";
    }
  }
  return out;
}

void save_matrix_market(const fs::path& path, const Corpus& X) { write_file(path, format_matrix_market(X)); }

Vocabulary Vocabulary::from_terms(std::vector<std::string> terms, int min_count) {
  Vocabulary vocab;
  vocab.min_count = min_count;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].empty()) throw DataError("empty term at vocabulary index " + std::to_string(i));
    if (!vocab.index.emplace(terms[i], static_cast<Index>(i)).second) {
      throw DataError("duplicate term '" + terms[i] + "' in vocabulary");
    }
  }
  vocab.terms = std::move(terms);
  return vocab;
}

void save_vocabulary(const fs::path& path, const Vocabulary& vocab) {
  std::string out;
  for (const auto& t : vocab.terms) out += t + "\n";
  write_file(path, out);
}

Vocabulary load_vocabulary(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> terms;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    terms.push_back(line);
  }
  if (terms.empty()) throw DataError(path.string() + ": empty vocabulary");
  return Vocabulary::from_terms(std::move(terms));
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

IngestResult ingest_corpus(const fs::path& directory, int min_count) {
  if (min_count < 1) throw UsageError("--min-count must be >= 1");
  std::error_code ec;
  if (!fs::is_directory(directory, ec)) throw DataError("not a directory: " + directory.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory, ec)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  if (ec) throw DataError("cannot list " + directory.string() + ": " + ec.message());
  if (files.empty()) throw DataError("empty corpus: no files in " + directory.string());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  std::vector<std::map<std::string, long>> doc_counts(files.size());
  std::map<std::string, long> totals;
  for (std::size_t d = 0; d < files.size(); ++d) {
    for (auto& tok : tokenize(read_file(files[d]))) {
      ++doc_counts[d][tok];
      ++totals[tok];
    }
  }

  std::vector<std::string> terms;
  for (const auto& [term, count] : totals)
    if (count >= min_count) terms.push_back(term);
  if (terms.empty()) throw DataError("empty corpus: no term reaches min_count " + std::to_string(min_count));
  Vocabulary vocab = Vocabulary::from_terms(std::move(terms), min_count);

  std::vector<Corpus::Entry> entries;
  std::string empty_docs;
  std::vector<std::string> names;
  for (std::size_t d = 0; d < files.size(); ++d) {
    names.push_back(files[d].filename().string());
    bool any = false;
    for (const auto& [term, count] : doc_counts[d]) {
      auto it = vocab.index.find(term);
      if (it == vocab.index.end()) continue;
      entries.push_back({it->second, static_cast<Index>(d), static_cast<double>(count)});
      any = true;
    }
    if (!any) empty_docs += (empty_docs.empty() ? "" : ", ") + names.back();
  }
  if (!empty_docs.empty()) throw DataError("documents empty after min_count filtering: " + empty_docs);

  Corpus X(vocab.size(), static_cast<Index>(files.size()), entries);
  return {std::move(X), std::move(vocab), std::move(names)};
}

namespace {

json matrix_to_json(const Matrix<double>& M) {
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector<double>& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

[[noreturn]] void schema(const std::string& where, const std::string& what) {
  throw DataError("schema violation at " + where + ": " + what);
}

const json& field(const json& j, const char* name) {
  if (!j.contains(name)) schema(name, "missing field");
  return j.at(name);
}

double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) schema(where, "expected a number");
  return j.get<double>();
}

Index count_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number_integer() || v.get<long long>() < 1) schema(name, "expected a positive integer");
  return static_cast<Index>(v.get<long long>());
}

Matrix<double> json_to_matrix(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) schema(name, "expected a non-empty array of rows");
  const std::size_t n_cols = j[0].is_array() ? j[0].size() : 0;
  Matrix<double> M(static_cast<Index>(j.size()), static_cast<Index>(n_cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string row_path = name + "[" + std::to_string(i) + "]";
    if (!j[i].is_array()) schema(row_path, "expected an array");
    if (j[i].size() != n_cols) {
      schema(row_path, "row has " + std::to_string(j[i].size()) + " entries, expected " + std::to_string(n_cols));
    }
    for (std::size_t c = 0; c < n_cols; ++c) {
      M(static_cast<Index>(i), static_cast<Index>(c)) =
          number_at(j[i][c], row_path + "[" + std::to_string(c) + "]");
    }
  }
  return M;
}

Vector<double> json_to_vector(const json& j, const std::string& name) {
  if (j.is_null()) return {};
  if (!j.is_array()) schema(name, "expected an array");
  Vector<double> v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Index>(i)) = number_at(j[i], name + "[" + std::to_string(i) + "]");
  return v;
}

void require_dims(const Matrix<double>& M, const char* name, Index rows, const char* row_label, Index cols,
                  const char* col_label) {
  if (M.rows() != rows) {
    throw DataError(std::string("dimension mismatch: ") + name + " has " + std::to_string(M.rows()) + " rows, " +
                    row_label + "=" + std::to_string(rows));
  }
  if (M.cols() != cols) {
    throw DataError(std::string("dimension mismatch: ") + name + " has " + std::to_string(M.cols()) + " columns, " +
                    col_label + "=" + std::to_string(cols));
  }
}

}  // namespace

void ModelFile::validate() const {
  if (format_version != kFormatVersion) {
    throw DataError("unsupported format_version " + std::to_string(format_version));
  }
  if (V < 1 || D < 1 || K < 1) throw DataError("dimensions V, D, K must be positive");
  if (constraint_mode != constraint_mode_for(method)) {
    throw DataError("constraint_mode " + std::string(to_string(constraint_mode)) + " does not match method " +
                    std::string(to_string(method)));
  }
  require_dims(W, "W", V, "V", K, "K");
  if (!std::isfinite(lambda) || lambda < 0) throw DataError("lambda must be finite and >= 0");
  if (!std::isfinite(objective)) throw DataError("objective must be finite");
  if (is_variational(method)) {
    if (H) throw DataError("variational model must store beta, not H");
    if (!beta) throw DataError("schema violation at beta: missing field");
    require_dims(*beta, "beta", K, "K", D, "D");
    if (alpha.size() != K) {
      throw DataError("dimension mismatch: alpha has " + std::to_string(alpha.size()) + " entries, K=" +
                      std::to_string(K));
    }
    const bool gap = method == Method::Gap;
    if (gap != b_rate.has_value()) throw DataError(gap ? "gap model needs b_rate" : "b_rate is only valid for gap");
    if (gap && rate_a.size() != K) {
      throw DataError("dimension mismatch: rate_a has " + std::to_string(rate_a.size()) + " entries, K=" +
                      std::to_string(K));
    }
    if (!gap && rate_a.size() != 0) throw DataError("rate_a is only valid for gap");
    if (b_rate) require_dims(*b_rate, "b_rate", K, "K", D, "D");
    // Run the library's own invariant checks.
    detail::require_nonnegative(W, "W");
    detail::require_unit_columns(W, "W");
    Priors<double> priors(alpha, rate_a);
    VariationalState<double> state(*beta, b_rate);
  } else {
    if (beta || b_rate) throw DataError("multiplicative model must store H, not beta");
    if (!H) throw DataError("schema violation at H: missing field");
    require_dims(*H, "H", K, "K", D, "D");
    if (alpha.size() != 0 || rate_a.size() != 0) throw DataError("alpha/rate_a are only valid for lda and gap");
    Factorization<double> f(W, *H, constraint_mode);
  }
  if (trace && trace->objective.size() != trace->recon_evals.size()) {
    throw DataError("schema violation at trace: objective and recon_evals lengths differ");
  }
}

std::string model_to_json(const ModelFile& model) {
  model.validate();
  json j;
  j["format_version"] = model.format_version;
  j["method"] = std::string(to_string(model.method));
  j["V"] = model.V;
  j["D"] = model.D;
  j["K"] = model.K;
  j["constraint_mode"] = std::string(to_string(model.constraint_mode));
  j["W"] = matrix_to_json(model.W);
  if (model.H) j["H"] = matrix_to_json(*model.H);
  if (model.beta) j["beta"] = matrix_to_json(*model.beta);
  if (model.b_rate) j["b_rate"] = matrix_to_json(*model.b_rate);
  j["alpha"] = vector_to_json(model.alpha);
  j["rate_a"] = vector_to_json(model.rate_a);
  j["lambda"] = model.lambda;
  j["objective"] = model.objective;
  if (model.trace) {
    json t;
    t["initial_objective"] = model.trace->initial_objective;
    t["objective"] = model.trace->objective;
    t["recon_evals"] = model.trace->recon_evals;
    j["trace"] = std::move(t);
  }
  return j.dump(1) + "\n";
}

ModelFile model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) schema("(root)", "expected an object");

  ModelFile m;
  const json& version = field(j, "format_version");
  if (!version.is_number_integer()) schema("format_version", "expected an integer");
  m.format_version = version.get<int>();
  if (m.format_version != ModelFile::kFormatVersion) {
    throw DataError("unsupported format_version " + std::to_string(m.format_version));
  }
  const json& method = field(j, "method");
  if (!method.is_string()) schema("method", "expected a string");
  try {
    m.method = parse_method(method.get<std::string>());
  } catch (const UsageError& e) {
    schema("method", e.what());
  }
  m.V = count_field(j, "V");
  m.D = count_field(j, "D");
  m.K = count_field(j, "K");
  const json& mode = field(j, "constraint_mode");
  if (!mode.is_string()) schema("constraint_mode", "expected a string");
  const std::string mode_name = mode.get<std::string>();
  bool mode_known = false;
  for (ConstraintMode c : {ConstraintMode::Unconstrained, ConstraintMode::WSimplex, ConstraintMode::BothSimplex}) {
    if (to_string(c) == mode_name) {
      m.constraint_mode = c;
      mode_known = true;
    }
  }
  if (!mode_known) schema("constraint_mode", "unknown mode '" + mode_name + "'");

  m.W = json_to_matrix(field(j, "W"), "W");
  if (j.contains("H")) m.H = json_to_matrix(j["H"], "H");
  if (j.contains("beta")) m.beta = json_to_matrix(j["beta"], "beta");
  if (j.contains("b_rate")) m.b_rate = json_to_matrix(j["b_rate"], "b_rate");
  m.alpha = json_to_vector(field(j, "alpha"), "alpha");
  m.rate_a = json_to_vector(field(j, "rate_a"), "rate_a");
  m.lambda = number_at(field(j, "lambda"), "lambda");
  m.objective = number_at(field(j, "objective"), "objective");
  if (j.contains("trace") && !j["trace"].is_null()) {
    const json& t = j["trace"];
    if (!t.is_object()) schema("trace", "expected an object");
    TraceRecord rec;
    rec.initial_objective = number_at(field(t, "initial_objective"), "trace.initial_objective");
    const Vector<double> obj = json_to_vector(field(t, "objective"), "trace.objective");
    rec.objective.assign(obj.data(), obj.data() + obj.size());
    const json& evals = field(t, "recon_evals");
    if (!evals.is_array()) schema("trace.recon_evals", "expected an array");
    for (std::size_t i = 0; i < evals.size(); ++i) {
      if (!evals[i].is_number_integer()) schema("trace.recon_evals[" + std::to_string(i) + "]", "expected an integer");
      rec.recon_evals.push_back(evals[i].get<int>());
    }
    m.trace = std::move(rec);
  }
  m.validate();
  return m;
}

void save_model(const fs::path& path, const ModelFile& model) { write_file(path, model_to_json(model)); }

ModelFile load_model(const fs::path& path) {
  try {
    return model_from_json(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_trace_csv(const FitTrace& trace) {
  std::string out = "iter,objective,recon_evals,millis\n";
  out += "0," + format_double(trace.initial_objective) + ",0,0\n";
  char millis[32];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(millis, sizeof millis, "%.3f", trace.millis[i]);
    out += std::to_string(i + 1) + "," + format_double(trace.objective[i]) + "," +
           std::to_string(trace.recon_evals[i]) + "," + millis + "\n";
  }
  return out;
}

void write_trace_csv(const fs::path& path, const FitTrace& trace) { write_file(path, format_trace_csv(trace)); }

}  // namespace klnmf::io
