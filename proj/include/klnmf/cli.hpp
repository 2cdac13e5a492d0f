#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "klnmf/io.hpp"

namespace klnmf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

struct CompareOptions {
  std::string pair;
  std::uint64_t seed = 0;
  int iters = 100;
  double tol = 1e-12;
  Index topics = 5;
  double lambda = 1.0;
  double alpha = 0.5;
  double rate_a = 1.0;
  int threads = 1;
};

struct CompareCheck {
  std::string name;
  double value;
  double tolerance;
  bool pass() const { return value <= tolerance; }
};

struct CompareReport {
  std::vector<CompareCheck> checks;
  bool pass() const;
};

/// Pairs: alg4-alg5, sparse-plain, gap-lda, plsa-ref. Both runs share their
/// initialization; every check is a maximum over all iterations n >= 1.
CompareReport run_compare(const io::Corpus& X, const CompareOptions& options);

/// Entry point of the `klnmf` executable. Returns the process exit code.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace klnmf::cli
