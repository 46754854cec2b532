#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oodmol/molgraph.hpp"

namespace oodmol {

inline constexpr int kFingerprintLength = 128;
inline constexpr int kDefaultMorganRadius = 2;
inline constexpr int kDefaultWlIterations = 3;

/// Fixed-length bit vector.
class Fingerprint {
 public:
  Fingerprint() = default;
  explicit Fingerprint(int length);

  int length() const { return length_; }
  int set_count() const;
  bool test(int bit) const { return (words_[bit >> 6] >> (bit & 63)) & 1U; }
  void set(int bit) { words_[bit >> 6] |= std::uint64_t{1} << (bit & 63); }
  std::span<const std::uint64_t> words() const { return words_; }
  /// Bits as 0/1 reals.
  std::vector<double> as_reals() const;

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;

 private:
  int length_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Per-round atom invariants; element [r][atom] is the radius-r identifier.
std::vector<std::vector<std::uint64_t>> morgan_invariants(const MolGraph& g, int radius);

/// Circular fingerprint: every identifier from rounds 0..radius folded modulo
/// `length`. Throws BadConfig unless radius >= 0 and length is a power of two.
Fingerprint morgan_fingerprint(const MolGraph& g, int radius = kDefaultMorganRadius,
                               int length = kFingerprintLength);

/// |a & b| / |a | b|, 1 when both are empty.
double tanimoto(const Fingerprint& a, const Fingerprint& b);

/// dot / (|a| |b| + eps), 0 when either vector is zero.
double cosine_sim(const Fingerprint& a, const Fingerprint& b, double eps = 1e-8);

/// Unnormalized Weisfeiler-Lehman subtree kernel summed over rounds 0..iterations.
double wl_raw_kernel(const MolGraph& a, const MolGraph& b, int iterations = kDefaultWlIterations);

/// Cosine-normalized WL kernel in [0, 1]. Empty graphs score 0 against any
/// non-empty graph and 1 against each other.
double wl_kernel(const MolGraph& a, const MolGraph& b, int iterations = kDefaultWlIterations);

/// Symmetric matrix of wl_kernel values, row-major n x n.
std::vector<double> wl_gram(std::span<const MolGraph> graphs, int iterations = kDefaultWlIterations);

}  // namespace oodmol
