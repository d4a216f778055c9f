#include "eprk/trees.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

namespace eprk {

RootedTree::RootedTree(std::vector<RootedTree> children) : children_(std::move(children)) {
  std::sort(children_.begin(), children_.end());
  order_ = 1;
  sigma_ = 1;
  for (std::size_t i = 0; i < children_.size();) {
    std::size_t j = i;
    while (j < children_.size() && children_[j] == children_[i]) ++j;
    for (std::size_t k = 1; k <= j - i; ++k) sigma_ *= k;
    for (std::size_t k = i; k < j; ++k) sigma_ *= children_[k].sigma_;
    i = j;
  }
  for (const auto& c : children_) order_ += c.order_;
}

unsigned RootedTree::max_children() const {
  unsigned m = static_cast<unsigned>(children_.size());
  for (const auto& c : children_) m = std::max(m, c.max_children());
  return m;
}

namespace {

unsigned max_degree_below(const RootedTree& t) {
  unsigned m = static_cast<unsigned>(t.children().size()) + 1;
  for (const auto& c : t.children()) m = std::max(m, max_degree_below(c));
  return m;
}

}  // namespace

unsigned RootedTree::max_degree() const {
  unsigned m = static_cast<unsigned>(children_.size());
  for (const auto& c : children_) m = std::max(m, max_degree_below(c));
  return m;
}

std::string RootedTree::str() const {
  if (children_.empty()) return "*";
  std::string s = "[";
  for (std::size_t i = 0; i < children_.size(); ++i) {
    if (i) s += ",";
    s += children_[i].str();
  }
  return s + "]";
}

namespace {

RootedTree parse_at(std::string_view s, std::size_t& pos) {
  if (pos >= s.size()) throw InputError("tree text ends early");
  if (s[pos] == '*') {
    ++pos;
    return RootedTree();
  }
  if (s[pos] != '[') throw InputError("unexpected character in tree text");
  ++pos;
  std::vector<RootedTree> kids;
  while (true) {
    kids.push_back(parse_at(s, pos));
    if (pos >= s.size()) throw InputError("unterminated tree bracket");
    if (s[pos] == ',') {
      ++pos;
      continue;
    }
    if (s[pos] == ']') {
      ++pos;
      break;
    }
    throw InputError("expected ',' or ']' in tree text");
  }
  return RootedTree(std::move(kids));
}

}  // namespace

RootedTree RootedTree::parse(std::string_view text) {
  std::string compact;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) compact += ch;
  std::size_t pos = 0;
  RootedTree t = parse_at(compact, pos);
  if (pos != compact.size()) throw InputError("trailing characters after tree");
  return t;
}

bool operator==(const RootedTree& a, const RootedTree& b) {
  return a.order_ == b.order_ && a.children_ == b.children_;
}

std::strong_ordering operator<=>(const RootedTree& a, const RootedTree& b) {
  if (auto c = a.order_ <=> b.order_; c != 0) return c;
  const std::size_t n = std::min(a.children_.size(), b.children_.size());
  for (std::size_t i = 0; i < n; ++i)
    if (auto c = a.children_[i] <=> b.children_[i]; c != 0) return c;
  return a.children_.size() <=> b.children_.size();
}

RootedTree bushy_tree(unsigned k) { return RootedTree(std::vector<RootedTree>(k)); }

RootedTree double_bush_tree(unsigned p, unsigned q) {
  if (p == 0) throw InputError("double bush needs p >= 1");
  std::vector<RootedTree> kids(p - 1);
  kids.push_back(bushy_tree(q));
  return RootedTree(std::move(kids));
}

namespace {

void multisets(const std::vector<RootedTree>& pool, std::size_t from, unsigned remaining,
               std::vector<RootedTree>& current, std::vector<RootedTree>& out) {
  if (remaining == 0) {
    out.emplace_back(current);
    return;
  }
  for (std::size_t i = from; i < pool.size(); ++i) {
    if (pool[i].order() > remaining) continue;
    current.push_back(pool[i]);
    multisets(pool, i, remaining - pool[i].order(), current, out);
    current.pop_back();
  }
}

}  // namespace

std::vector<RootedTree> enumerate_rooted(unsigned n) {
  if (n == 0 || n > 10) throw InputError("enumerate_rooted supports 1 <= n <= 10");
  std::vector<std::vector<RootedTree>> by_order(n + 1);
  by_order[1] = {RootedTree()};
  std::vector<RootedTree> pool{RootedTree()};
  for (unsigned k = 2; k <= n; ++k) {
    std::vector<RootedTree> current;
    multisets(pool, 0, k - 1, current, by_order[k]);
    std::sort(by_order[k].begin(), by_order[k].end());
    pool.insert(pool.end(), by_order[k].begin(), by_order[k].end());
  }
  return by_order[n];
}

RootedTree butcher_product(const RootedTree& u, const RootedTree& v) {
  auto kids = u.children();
  kids.push_back(v);
  return RootedTree(std::move(kids));
}

RootedTree root_shift(const RootedTree& t, std::size_t i) {
  if (i >= t.children().size()) throw InputError("root shift needs an existing child");
  auto rest = t.children();
  rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
  auto kids = t.children()[i].children();
  kids.emplace_back(std::move(rest));
  return RootedTree(std::move(kids));
}

bool is_self_product(const RootedTree& t) {
  const auto& kids = t.children();
  for (std::size_t i = 0; i < kids.size(); ++i) {
    if (i > 0 && kids[i] == kids[i - 1]) continue;
    if (kids[i].order() * 2 != t.order()) continue;
    auto rest = kids;
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
    if (RootedTree(std::move(rest)) == kids[i]) return true;
  }
  return false;
}

int FreeTree::find(const RootedTree& t) const {
  auto it = std::lower_bound(members.begin(), members.end(), t);
  if (it == members.end() || !(*it == t)) return -1;
  return static_cast<int>(it - members.begin());
}

FreeTree free_class(const RootedTree& t) {
  std::map<RootedTree, int> parity{{t, 1}};
  std::deque<RootedTree> queue{t};
  bool consistent = true;
  while (!queue.empty()) {
    RootedTree u = queue.front();
    queue.pop_front();
    const int pu = parity.at(u);
    for (std::size_t i = 0; i < u.children().size(); ++i) {
      if (i > 0 && u.children()[i] == u.children()[i - 1]) continue;
      RootedTree v = root_shift(u, i);
      auto [it, inserted] = parity.try_emplace(v, -pu);
      if (inserted)
        queue.push_back(std::move(v));
      else if (it->second != -pu)
        consistent = false;
    }
  }

  FreeTree ft;
  ft.order = t.order();
  ft.max_branching = t.max_degree();
  for (const auto& [u, p] : parity) {
    ft.members.push_back(u);
    if (is_self_product(u)) ft.superfluous = true;
  }
  if (!consistent && !ft.superfluous)
    throw InternalError("inconsistent root-shift parity in class of " + t.str());
  const int base = parity.begin()->second;
  for (const auto& [u, p] : parity) ft.parity.push_back(ft.superfluous ? 0 : p * base);
  return ft;
}

std::vector<FreeTree> enumerate_free(unsigned n) {
  std::vector<FreeTree> out;
  std::set<RootedTree> seen;
  for (const auto& t : enumerate_rooted(n)) {
    if (seen.count(t)) continue;
    auto ft = free_class(t);
    seen.insert(ft.members.begin(), ft.members.end());
    out.push_back(std::move(ft));
  }
  return out;
}

std::vector<FreeTree> conditions_up_to(unsigned n, unsigned m) {
  if (n > 9) throw InputError("conditions_up_to supports n <= 9");
  std::vector<FreeTree> out;
  for (unsigned k = 2; k <= n + 1; ++k)
    for (auto& ft : enumerate_free(k))
      if (!ft.superfluous && ft.max_branching <= m) out.push_back(std::move(ft));
  return out;
}

Real ButcherTableau::rowsum_defect() const {
  PrecisionScope ps(precision_digits);
  Real worst = 0;
  for (unsigned i = 0; i < stages(); ++i) {
    Real s = 0;
    for (unsigned j = 0; j < stages(); ++j) s += A(i, j);
    worst = std::max(worst, Real(abs(s - c[i])));
  }
  return worst;
}

namespace {

RealVec stage_vector(const RootedTree& t, const ButcherTableau& tab) {
  RealVec g(tab.stages(), Real(1));
  for (const auto& child : t.children()) {
    RealVec ag = tab.A * stage_vector(child, tab);
    for (unsigned i = 0; i < tab.stages(); ++i) g[i] *= ag[i];
  }
  return g;
}

}  // namespace

Real rk_weight(const RootedTree& t, const ButcherTableau& tab) {
  PrecisionScope ps(tab.precision_digits);
  return dot(tab.b, stage_vector(t, tab));
}

Real rk_weight(const Forest& forest, const ButcherTableau& tab) {
  PrecisionScope ps(tab.precision_digits);
  Real w = 1;
  for (const auto& t : forest) w *= rk_weight(t, tab);
  return w;
}

Real energy_condition_residual(const FreeTree& ft, const ButcherTableau& tab) {
  PrecisionScope ps(tab.precision_digits);
  if (ft.superfluous) return Real(0);
  Real r = 0;
  for (std::size_t k = 0; k < ft.members.size(); ++k)
    r += Real(ft.parity[k]) / Real(ft.members[k].sigma()) *
         rk_weight(ft.members[k].children(), tab);
  return r;
}

}  // namespace eprk
