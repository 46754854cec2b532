#include "oodmol/chemsim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <string>

#include "oodmol/error.hpp"
#include "oodmol/rng.hpp"

namespace oodmol {

namespace {

constexpr std::uint64_t kMorganSeed = 0x6d6f7267616e3031ULL;  // "morgan01"

void require_same_length(const Fingerprint& a, const Fingerprint& b) {
  if (a.length() != b.length()) {
    throw Error(ErrorKind::LengthMismatch, "fingerprint lengths " + std::to_string(a.length()) +
                                               " and " + std::to_string(b.length()));
  }
}

}  // namespace

Fingerprint::Fingerprint(int length) : length_(length), words_((length + 63) / 64, 0) {}

int Fingerprint::set_count() const {
  int count = 0;
  for (std::uint64_t w : words_) count += std::popcount(w);
  return count;
}

std::vector<double> Fingerprint::as_reals() const {
  std::vector<double> out(length_);
  for (int i = 0; i < length_; ++i) out[i] = test(i) ? 1.0 : 0.0;
  return out;
}

std::vector<std::vector<std::uint64_t>> morgan_invariants(const MolGraph& g, int radius) {
  const int n = static_cast<int>(g.atom_count());
  std::vector<std::vector<std::uint64_t>> rounds;
  std::vector<std::uint64_t> current(n);
  for (int i = 0; i < n; ++i) {
    const Atom& a = g.atom(i);
    std::uint64_t h = kMorganSeed;
    h = hash_combine(h, static_cast<std::uint64_t>(a.element));
    h = hash_combine(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(a.charge)));
    h = hash_combine(h, static_cast<std::uint64_t>(g.degree(i)));
    h = hash_combine(h, static_cast<std::uint64_t>(implicit_h_count(g, i)));
    h = hash_combine(h, a.aromatic ? 1U : 0U);
    current[i] = h;
  }
  rounds.push_back(current);
  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(n);
    for (int i = 0; i < n; ++i) {
      std::vector<std::pair<std::uint64_t, std::uint64_t>> env;
      for (const Neighbor& nb : g.neighbors(i)) {
        env.emplace_back(static_cast<std::uint64_t>(g.bond(nb.bond).order), current[nb.atom]);
      }
      std::sort(env.begin(), env.end());
      std::uint64_t h = hash_combine(kMorganSeed + static_cast<std::uint64_t>(r), current[i]);
      for (const auto& [order, inv] : env) h = hash_combine(hash_combine(h, order), inv);
      next[i] = h;
    }
    current = std::move(next);
    rounds.push_back(current);
  }
  return rounds;
}

Fingerprint morgan_fingerprint(const MolGraph& g, int radius, int length) {
  if (radius < 0) throw Error(ErrorKind::BadConfig, "negative Morgan radius");
  if (length <= 0 || !std::has_single_bit(static_cast<unsigned>(length))) {
    throw Error(ErrorKind::BadConfig, "fingerprint length must be a power of two");
  }
  Fingerprint fp(length);
  const std::uint64_t mask = static_cast<std::uint64_t>(length) - 1;
  for (const auto& round : morgan_invariants(g, radius)) {
    for (std::uint64_t id : round) fp.set(static_cast<int>(id & mask));
  }
  return fp;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  require_same_length(a, b);
  int both = 0, either = 0;
  const auto wa = a.words();
  const auto wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) {
    both += std::popcount(wa[i] & wb[i]);
    either += std::popcount(wa[i] | wb[i]);
  }
  if (either == 0) return 1.0;
  return static_cast<double>(both) / static_cast<double>(either);
}

double cosine_sim(const Fingerprint& a, const Fingerprint& b, double eps) {
  require_same_length(a, b);
  int dot = 0;
  const auto wa = a.words();
  const auto wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) dot += std::popcount(wa[i] & wb[i]);
  const int na = a.set_count();
  const int nb = b.set_count();
  if (na == 0 || nb == 0) return 0.0;
  return static_cast<double>(dot) / (std::sqrt(static_cast<double>(na)) * std::sqrt(static_cast<double>(nb)) + eps);
}

namespace {

// Joint WL relabeling of a set of graphs; returns per-graph label histograms
// keyed by compressed label ids that are shared across the set.
std::vector<std::map<long, long>> wl_histograms(std::span<const MolGraph* const> graphs, int iterations) {
  std::vector<std::map<long, long>> hist(graphs.size());
  std::vector<std::vector<long>> labels(graphs.size());
  std::map<std::string, long> initial;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const MolGraph& g = *graphs[gi];
    labels[gi].resize(g.atom_count());
    for (int i = 0; i < static_cast<int>(g.atom_count()); ++i) {
      std::string sym(element_symbol(g.atom(i).element));
      if (g.atom(i).aromatic) sym = "a:" + sym;
      auto [it, inserted] = initial.emplace(sym, static_cast<long>(initial.size()));
      labels[gi][i] = it->second;
      ++hist[gi][it->second];
    }
  }
  long next_id = static_cast<long>(initial.size());
  for (int h = 1; h <= iterations; ++h) {
    std::map<std::vector<long>, long> compress;
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
      const MolGraph& g = *graphs[gi];
      std::vector<long> next(g.atom_count());
      for (int i = 0; i < static_cast<int>(g.atom_count()); ++i) {
        std::vector<long> sig;
        sig.push_back(labels[gi][i]);
        std::vector<long> nbr;
        for (const Neighbor& nb : g.neighbors(i)) nbr.push_back(labels[gi][nb.atom]);
        std::sort(nbr.begin(), nbr.end());
        sig.insert(sig.end(), nbr.begin(), nbr.end());
        auto [it, inserted] = compress.emplace(std::move(sig), next_id);
        if (inserted) ++next_id;
        next[i] = it->second;
        ++hist[gi][it->second];
      }
      labels[gi] = std::move(next);
    }
  }
  return hist;
}

double histogram_dot(const std::map<long, long>& a, const std::map<long, long>& b) {
  double total = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      total += static_cast<double>(ia->second) * static_cast<double>(ib->second);
      ++ia;
      ++ib;
    }
  }
  return total;
}

}  // namespace

double wl_raw_kernel(const MolGraph& a, const MolGraph& b, int iterations) {
  if (iterations < 0) throw Error(ErrorKind::BadConfig, "negative WL iteration count");
  const MolGraph* graphs[] = {&a, &b};
  const auto hist = wl_histograms(graphs, iterations);
  return histogram_dot(hist[0], hist[1]);
}

double wl_kernel(const MolGraph& a, const MolGraph& b, int iterations) {
  if (iterations < 0) throw Error(ErrorKind::BadConfig, "negative WL iteration count");
  if (a.empty() || b.empty()) return a.empty() && b.empty() ? 1.0 : 0.0;
  const MolGraph* graphs[] = {&a, &b};
  const auto hist = wl_histograms(graphs, iterations);
  const double ab = histogram_dot(hist[0], hist[1]);
  const double aa = histogram_dot(hist[0], hist[0]);
  const double bb = histogram_dot(hist[1], hist[1]);
  return ab / std::sqrt(aa * bb);
}

std::vector<double> wl_gram(std::span<const MolGraph> graphs, int iterations) {
  if (iterations < 0) throw Error(ErrorKind::BadConfig, "negative WL iteration count");
  std::vector<const MolGraph*> ptrs;
  for (const MolGraph& g : graphs) ptrs.push_back(&g);
  const auto hist = wl_histograms(ptrs, iterations);
  const std::size_t n = graphs.size();
  std::vector<double> self(n);
  for (std::size_t i = 0; i < n; ++i) self[i] = histogram_dot(hist[i], hist[i]);
  std::vector<double> gram(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double v;
      if (graphs[i].empty() || graphs[j].empty()) {
        v = graphs[i].empty() && graphs[j].empty() ? 1.0 : 0.0;
      } else {
        v = histogram_dot(hist[i], hist[j]) / std::sqrt(self[i] * self[j]);
      }
      gram[i * n + j] = gram[j * n + i] = v;
    }
  }
  return gram;
}

}  // namespace oodmol
