#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "klnmf/types.hpp"

namespace klnmf::io {

using Corpus = TermDocMatrix<double>;

/// Reads "%%MatrixMarket matrix coordinate real general" (integer fields are
/// accepted too). Indices are 1-based; zero values are dropped. Rejects
/// negative values, duplicates, out-of-range indices and documents with no
/// counts.
Corpus load_matrix_market(const std::filesystem::path& path);
Corpus parse_matrix_market(const std::string& text);

/// Entries in column-major order, values with 17 significant digits.
std::string format_matrix_market(const Corpus& X);
void save_matrix_market(const std::filesystem::path& path, const Corpus& X);

struct Vocabulary {
  std::vector<std::string> terms;
  std::unordered_map<std::string, Index> index;
  int min_count = 1;

  Index size() const { return static_cast<Index>(terms.size()); }
  static Vocabulary from_terms(std::vector<std::string> terms, int min_count = 1);
};

/// One term per line.
void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary load_vocabulary(const std::filesystem::path& path);

/// Lowercases ASCII letters and splits on runs of characters that are not
/// ASCII alphanumerics. Bytes >= 0x80 are kept as word characters so UTF-8
/// sequences stay intact.
std::vector<std::string> tokenize(const std::string& text);

struct IngestResult {
  Corpus matrix;
  Vocabulary vocab;
  std::vector<std::string> documents;  ///< file names, in column order
};

/// Every regular file in `directory` is one document; files are taken in
/// lexicographic order of their names and terms are indexed lexicographically.
/// Terms with total count below min_count are dropped.
IngestResult ingest_corpus(const std::filesystem::path& directory, int min_count);

struct TraceRecord {
  double initial_objective = 0;
  std::vector<double> objective;
  std::vector<int> recon_evals;
};

struct ModelFile {
  static constexpr int kFormatVersion = 1;

  int format_version = kFormatVersion;
  Method method = Method::MuJoint;
  Index V = 0;
  Index D = 0;
  Index K = 0;
  ConstraintMode constraint_mode = ConstraintMode::WSimplex;
  Matrix<double> W;
  std::optional<Matrix<double>> H;       ///< multiplicative methods
  std::optional<Matrix<double>> beta;    ///< variational methods
  std::optional<Matrix<double>> b_rate;  ///< Gamma-Poisson only
  Vector<double> alpha;                  ///< empty for multiplicative methods
  Vector<double> rate_a;                 ///< empty unless Gamma-Poisson
  double lambda = 0;
  double objective = 0;
  std::optional<TraceRecord> trace;

  /// Throws DataError on any inconsistency.
  void validate() const;
};

std::string model_to_json(const ModelFile& model);
ModelFile model_from_json(const std::string& text);
void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path);

/// Header iter,objective,recon_evals,millis; row 0 holds the initial objective.
std::string format_trace_csv(const FitTrace& trace);
void write_trace_csv(const std::filesystem::path& path, const FitTrace& trace);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace klnmf::io
