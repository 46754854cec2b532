#include <algorithm>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "oodmol/molgraph.hpp"

namespace oodmol {

namespace {

using Signature = std::pair<long, std::vector<std::pair<int, long>>>;

// Iterated neighborhood refinement. Ranks are order-preserving: an atom's new
// rank sorts first by its old rank, so refinement only ever splits cells.
std::vector<long> refine(const MolGraph& g, std::vector<long> labels) {
  const int n = static_cast<int>(g.atom_count());
  std::size_t distinct = 0;
  while (true) {
    std::vector<Signature> sigs(n);
    for (int i = 0; i < n; ++i) {
      sigs[i].first = labels[i];
      for (const Neighbor& nb : g.neighbors(i)) {
        sigs[i].second.emplace_back(static_cast<int>(g.bond(nb.bond).order), labels[nb.atom]);
      }
      std::sort(sigs[i].second.begin(), sigs[i].second.end());
    }
    std::vector<Signature> uniq = sigs;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (int i = 0; i < n; ++i) {
      labels[i] = std::lower_bound(uniq.begin(), uniq.end(), sigs[i]) - uniq.begin();
    }
    if (uniq.size() == distinct) return labels;
    distinct = uniq.size();
  }
}

class CanonicalSearch {
 public:
  explicit CanonicalSearch(const MolGraph& g) : g_(g) {}

  std::string run() {
    const int n = static_cast<int>(g_.atom_count());
    std::vector<std::tuple<int, int, int, int>> inv(n);
    for (int i = 0; i < n; ++i) {
      const Atom& a = g_.atom(i);
      inv[i] = {static_cast<int>(a.element), a.aromatic ? 1 : 0, a.charge, g_.degree(i)};
    }
    auto sorted = inv;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<long> labels(n);
    for (int i = 0; i < n; ++i) {
      labels[i] = std::lower_bound(sorted.begin(), sorted.end(), inv[i]) - sorted.begin();
    }
    descend(std::move(labels));
    return best_;
  }

 private:
  void descend(std::vector<long> labels) {
    labels = refine(g_, std::move(labels));
    const int n = static_cast<int>(labels.size());
    std::map<long, std::vector<int>> cells;
    for (int i = 0; i < n; ++i) cells[labels[i]].push_back(i);
    const std::vector<int>* target = nullptr;
    long target_label = 0;
    for (const auto& [label, members] : cells) {
      if (members.size() > 1) {
        target = &members;
        target_label = label;
        break;
      }
    }
    if (target == nullptr) {
      std::vector<int> rank(n);
      for (int i = 0; i < n; ++i) rank[i] = static_cast<int>(labels[i]);
      std::string s = to_smiles(g_, rank);
      if (!have_best_ || s < best_) {
        best_ = std::move(s);
        have_best_ = true;
      }
      return;
    }
    for (int v : *target) {
      std::vector<long> next(n);
      for (int i = 0; i < n; ++i) next[i] = 2 * labels[i] + 1;
      next[v] = 2 * target_label;
      descend(std::move(next));
    }
  }

  const MolGraph& g_;
  std::string best_;
  bool have_best_ = false;
};

}  // namespace

std::string canonical_key(const MolGraph& g) {
  if (g.empty()) return {};
  return CanonicalSearch(g).run();
}

}  // namespace oodmol
