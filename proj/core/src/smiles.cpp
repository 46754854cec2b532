#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "oodmol/error.hpp"
#include "oodmol/molgraph.hpp"

namespace oodmol {

namespace {

struct RingOpen {
  int atom;
  std::optional<BondOrder> order;
  std::size_t offset;
};

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view text) : text_(text) {}

  MolGraph parse() {
    if (text_.empty()) throw RejectedFeature(0, "empty SMILES");
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (static_cast<unsigned char>(c) > 127) throw RejectedFeature(pos_, "non-ASCII byte");
      switch (c) {
        case '(':
          if (prev_ < 0) throw RejectedFeature(pos_, "branch without a preceding atom");
          branches_.push_back({prev_, pos_});
          ++pos_;
          break;
        case ')':
          if (branches_.empty()) throw RejectedFeature(pos_, "unmatched ')'");
          if (pending_) throw RejectedFeature(pos_, "bond symbol before ')'");
          prev_ = branches_.back().first;
          branches_.pop_back();
          ++pos_;
          break;
        case '.':
          if (pending_) throw RejectedFeature(pos_, "bond symbol before '.'");
          prev_ = -1;
          ++pos_;
          break;
        case '-': set_bond(BondOrder::Single); break;
        case '=': set_bond(BondOrder::Double); break;
        case '#': set_bond(BondOrder::Triple); break;
        case ':': set_bond(BondOrder::Aromatic); break;
        case '/':
        case '\\':
          throw RejectedFeature(pos_, "stereo bond marker");
        case '@':
          throw RejectedFeature(pos_, "stereo marker");
        case '%': {
          if (pos_ + 2 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
              !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2]))) {
            throw RejectedFeature(pos_, "malformed %nn ring closure");
          }
          const int label = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
          ring_closure(label, pos_);
          pos_ += 3;
          break;
        }
        case '[':
          bracket_atom();
          break;
        default:
          if (std::isdigit(static_cast<unsigned char>(c))) {
            ring_closure(c - '0', pos_);
            ++pos_;
          } else {
            organic_atom();
          }
      }
    }
    if (pending_) throw RejectedFeature(pending_offset_, "dangling bond symbol");
    if (!branches_.empty()) throw RejectedFeature(branches_.back().second, "unmatched '('");
    if (!rings_.empty()) throw RejectedFeature(rings_.begin()->second.offset, "unclosed ring");
    return MolGraph(std::move(atoms_), std::move(bonds_), std::string(text_));
  }

 private:
  void set_bond(BondOrder order) {
    if (pending_) throw RejectedFeature(pos_, "consecutive bond symbols");
    if (prev_ < 0) throw RejectedFeature(pos_, "bond symbol without a preceding atom");
    pending_ = order;
    pending_offset_ = pos_;
    ++pos_;
  }

  BondOrder resolve(int a, int b, std::optional<BondOrder> explicit_order, std::size_t offset) {
    const bool both_aromatic = atoms_[a].aromatic && atoms_[b].aromatic;
    if (!explicit_order) return both_aromatic ? BondOrder::Aromatic : BondOrder::Single;
    if (*explicit_order == BondOrder::Aromatic && !both_aromatic) {
      throw RejectedFeature(offset, "aromatic bond between non-aromatic atoms");
    }
    return *explicit_order;
  }

  void add_bond(int a, int b, BondOrder order, std::size_t offset) {
    if (a == b) throw RejectedFeature(offset, "ring closure onto the same atom");
    const auto key = std::minmax(a, b);
    if (!bond_keys_.insert(key).second) throw RejectedFeature(offset, "duplicate bond");
    bonds_.push_back({a, b, order});
  }

  void push_atom(Atom atom, std::size_t offset) {
    const int idx = static_cast<int>(atoms_.size());
    atoms_.push_back(atom);
    if (prev_ >= 0) {
      const BondOrder order = resolve(prev_, idx, pending_, pending_ ? pending_offset_ : offset);
      add_bond(prev_, idx, order, offset);
    } else if (pending_) {
      throw RejectedFeature(pending_offset_, "bond symbol without a preceding atom");
    }
    pending_.reset();
    prev_ = idx;
  }

  void ring_closure(int label, std::size_t offset) {
    if (prev_ < 0) throw RejectedFeature(offset, "ring closure without a preceding atom");
    auto it = rings_.find(label);
    if (it == rings_.end()) {
      rings_[label] = {prev_, pending_, offset};
      pending_.reset();
      return;
    }
    const RingOpen open = it->second;
    rings_.erase(it);
    std::optional<BondOrder> order = open.order;
    if (pending_) {
      if (order && *order != *pending_) throw RejectedFeature(offset, "conflicting ring-closure bond");
      order = pending_;
    }
    pending_.reset();
    const BondOrder resolved = resolve(open.atom, prev_, order, offset);
    add_bond(open.atom, prev_, resolved, offset);
  }

  void organic_atom() {
    const std::size_t start = pos_;
    const char c = text_[pos_];
    Atom atom;
    std::string symbol(1, c);
    if (c == 'C' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'l') {
      symbol = "Cl";
    } else if (c == 'B' && pos_ + 1 < text_.size() && text_[pos_ + 1] == 'r') {
      symbol = "Br";
    }
    if (std::islower(static_cast<unsigned char>(c)) && symbol.size() == 1) {
      atom.aromatic = true;
      symbol[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    const auto element = element_from_symbol(symbol);
    if (!element) throw RejectedFeature(start, "unknown element '" + std::string(1, c) + "'");
    if (atom.aromatic && !can_be_aromatic(*element)) {
      throw RejectedFeature(start, "element cannot be aromatic");
    }
    atom.element = *element;
    pos_ += atom.aromatic ? 1 : symbol.size();
    push_atom(atom, start);
  }

  void bracket_atom() {
    const std::size_t start = pos_;
    ++pos_;
    auto peek = [&]() -> char { return pos_ < text_.size() ? text_[pos_] : '\0'; };
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;  // isotope, ignored
    Atom atom;
    const std::size_t sym_at = pos_;
    std::string symbol;
    char c = peek();
    if (!std::isalpha(static_cast<unsigned char>(c))) throw RejectedFeature(sym_at, "missing element in bracket atom");
    if (std::islower(static_cast<unsigned char>(c))) {
      atom.aromatic = true;
      symbol = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      ++pos_;
    } else {
      symbol = std::string(1, c);
      ++pos_;
      const char d = peek();
      if (std::islower(static_cast<unsigned char>(d)) && element_from_symbol(symbol + d)) {
        symbol += d;
        ++pos_;
      } else if (std::islower(static_cast<unsigned char>(d)) && d != 'H') {
        // Two-letter symbol outside the supported set, e.g. [Na].
        throw RejectedFeature(sym_at, "unknown element '" + symbol + d + "'");
      }
    }
    const auto element = element_from_symbol(symbol);
    if (!element) throw RejectedFeature(sym_at, "unknown element '" + symbol + "'");
    if (atom.aromatic && !can_be_aromatic(*element)) {
      throw RejectedFeature(sym_at, "element cannot be aromatic");
    }
    atom.element = *element;
    if (peek() == '@') throw RejectedFeature(pos_, "stereo marker");
    if (peek() == 'H') {
      ++pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
    if (peek() == '+' || peek() == '-') {
      const char sign = peek();
      int magnitude = 0;
      while (peek() == sign) {
        ++magnitude;
        ++pos_;
      }
      if (magnitude == 1 && std::isdigit(static_cast<unsigned char>(peek()))) {
        magnitude = 0;
        while (std::isdigit(static_cast<unsigned char>(peek()))) magnitude = magnitude * 10 + (text_[pos_++] - '0');
      }
      atom.charge = sign == '+' ? magnitude : -magnitude;
    }
    if (peek() == ':') {
      ++pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;  // atom class, ignored
    }
    if (peek() == '@') throw RejectedFeature(pos_, "stereo marker");
    if (peek() != ']') throw RejectedFeature(pos_, "unterminated bracket atom");
    ++pos_;
    push_atom(atom, start);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int prev_ = -1;
  std::optional<BondOrder> pending_;
  std::size_t pending_offset_ = 0;
  std::vector<std::pair<int, std::size_t>> branches_;
  std::map<int, RingOpen> rings_;
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::set<std::pair<int, int>> bond_keys_;
};

std::string atom_token(const Atom& a) {
  std::string sym(element_symbol(a.element));
  if (a.aromatic) sym[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(sym[0])));
  if (a.charge == 0) return sym;
  std::string out = "[" + sym + (a.charge > 0 ? "+" : "-");
  const int mag = a.charge > 0 ? a.charge : -a.charge;
  if (mag > 1) out += std::to_string(mag);
  return out + "]";
}

std::string bond_token(const MolGraph& g, const Bond& b) {
  switch (b.order) {
    case BondOrder::Single:
      return g.atom(b.begin).aromatic && g.atom(b.end).aromatic ? "-" : "";
    case BondOrder::Double: return "=";
    case BondOrder::Triple: return "#";
    case BondOrder::Aromatic: return "";
  }
  return "";
}

std::string ring_label(int digit) {
  if (digit < 10) return std::string(1, static_cast<char>('0' + digit));
  return "%" + std::to_string(digit);
}

class SmilesWriter {
 public:
  SmilesWriter(const MolGraph& g, std::span<const int> order) : g_(g) {
    const int n = static_cast<int>(g.atom_count());
    rank_.resize(n);
    if (order.empty()) {
      std::iota(rank_.begin(), rank_.end(), 0);
    } else {
      rank_.assign(order.begin(), order.end());
    }
    sorted_nbrs_.resize(n);
    for (int i = 0; i < n; ++i) {
      auto nbs = g.neighbors(i);
      sorted_nbrs_[i].assign(nbs.begin(), nbs.end());
      std::sort(sorted_nbrs_[i].begin(), sorted_nbrs_[i].end(),
                [&](const Neighbor& a, const Neighbor& b) { return rank_[a.atom] < rank_[b.atom]; });
    }
  }

  std::string write() {
    const int n = static_cast<int>(g_.atom_count());
    visit_order_.assign(n, -1);
    children_.assign(n, {});
    openings_.assign(n, {});
    closings_.assign(n, {});
    tree_bond_.assign(g_.bond_count(), false);
    std::vector<int> by_rank(n);
    std::iota(by_rank.begin(), by_rank.end(), 0);
    std::sort(by_rank.begin(), by_rank.end(), [&](int a, int b) { return rank_[a] < rank_[b]; });

    std::string out;
    for (int start : by_rank) {
      if (visit_order_[start] != -1) continue;
      build_tree(start, -1);
      if (!out.empty()) out += '.';
      emit(start, out);
    }
    return out;
  }

 private:
  void build_tree(int u, int parent_bond) {
    visit_order_[u] = counter_++;
    for (const Neighbor& nb : sorted_nbrs_[u]) {
      if (nb.bond == parent_bond) continue;
      if (visit_order_[nb.atom] == -1) {
        tree_bond_[nb.bond] = true;
        children_[u].push_back(nb);
        build_tree(nb.atom, nb.bond);
      } else if (!tree_bond_[nb.bond] && visit_order_[nb.atom] < visit_order_[u]) {
        // Back edge: opened at the earlier atom, closed here.
        openings_[nb.atom].push_back(nb.bond);
        closings_[u].push_back(nb.bond);
      }
    }
  }

  void emit(int u, std::string& out) {
    out += atom_token(g_.atom(u));
    // Close first so a digit released here can be reused by an opening.
    std::vector<int> closes = closings_[u];
    std::sort(closes.begin(), closes.end(), [&](int a, int b) {
      return visit_order_[g_.bond(a).other(u)] < visit_order_[g_.bond(b).other(u)];
    });
    for (int bi : closes) {
      const int digit = digit_of_[bi];
      out += ring_label(digit);
      free_digits_.insert(digit);
    }
    std::vector<int> opens = openings_[u];
    std::sort(opens.begin(), opens.end(), [&](int a, int b) {
      return rank_[g_.bond(a).other(u)] < rank_[g_.bond(b).other(u)];
    });
    for (int bi : opens) {
      int digit;
      if (!free_digits_.empty()) {
        digit = *free_digits_.begin();
        free_digits_.erase(free_digits_.begin());
      } else {
        digit = next_digit_++;
      }
      digit_of_[bi] = digit;
      out += bond_token(g_, g_.bond(bi));
      out += ring_label(digit);
    }
    const auto& kids = children_[u];
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const bool branch = k + 1 < kids.size();
      if (branch) out += '(';
      out += bond_token(g_, g_.bond(kids[k].bond));
      emit(kids[k].atom, out);
      if (branch) out += ')';
    }
  }

  const MolGraph& g_;
  std::vector<int> rank_;
  std::vector<std::vector<Neighbor>> sorted_nbrs_;
  std::vector<int> visit_order_;
  std::vector<std::vector<Neighbor>> children_;
  std::vector<std::vector<int>> openings_;
  std::vector<std::vector<int>> closings_;
  std::vector<bool> tree_bond_;
  std::map<int, int> digit_of_;
  std::set<int> free_digits_;
  int next_digit_ = 1;
  int counter_ = 0;
};

}  // namespace

MolGraph parse_smiles(std::string_view text) { return SmilesParser(text).parse(); }

std::string to_smiles(const MolGraph& g, std::span<const int> order) {
  if (g.empty()) return {};
  return SmilesWriter(g, order).write();
}

}  // namespace oodmol
