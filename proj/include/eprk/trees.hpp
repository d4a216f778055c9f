#pragma once

#include "eprk/linalg.hpp"
#include "eprk/numeric.hpp"

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace eprk {

// Rooted tree in canonical form: children are kept sorted, so equal trees
// have identical representations. Ordered by vertex count, then
// lexicographically on the child lists.
class RootedTree {
 public:
  // The one-vertex tree.
  RootedTree() = default;
  explicit RootedTree(std::vector<RootedTree> children);

  const std::vector<RootedTree>& children() const { return children_; }
  unsigned order() const { return order_; }
  std::uint64_t sigma() const { return sigma_; }
  // Largest number of children of any vertex.
  unsigned max_children() const;
  // Largest vertex degree when the tree is read as a free (unrooted) tree.
  unsigned max_degree() const;

  // "*" for a leaf, "[a,b,...]" for a root with children.
  std::string str() const;
  static RootedTree parse(std::string_view text);

  friend bool operator==(const RootedTree& a, const RootedTree& b);
  friend std::strong_ordering operator<=>(const RootedTree& a, const RootedTree& b);

 private:
  std::vector<RootedTree> children_;
  unsigned order_ = 1;
  std::uint64_t sigma_ = 1;
};

// [*^k]
RootedTree bushy_tree(unsigned k);
// [*^(p-1), [*^q]]; wrapping it under a new root gives t_1 = [[*^(p-1), [*^q]]],
// a member of the double bush class t_{p,q}.
RootedTree double_bush_tree(unsigned p, unsigned q);

// All rooted trees with exactly n vertices, ascending; n <= 10.
std::vector<RootedTree> enumerate_rooted(unsigned n);

// u o v: v grafted as an extra child of the root of u.
RootedTree butcher_product(const RootedTree& u, const RootedTree& v);

// Moves the root to child i.
RootedTree root_shift(const RootedTree& t, std::size_t i);

// True when t = u o u for some u.
bool is_self_product(const RootedTree& t);

struct FreeTree {
  // Sorted ascending; designated() is the smallest.
  std::vector<RootedTree> members;
  // (-1)^kappa(designated, member); 0 throughout for superfluous classes,
  // where the parity is not well defined.
  std::vector<int> parity;
  bool superfluous = false;
  unsigned order = 0;
  unsigned max_branching = 0;

  const RootedTree& designated() const { return members.front(); }
  // Index of a member, or -1.
  int find(const RootedTree& t) const;
};

// Closure of t under root shifts. Throws InternalError on inconsistent parity
// in a class with no u o u member.
FreeTree free_class(const RootedTree& t);

// All free trees with n vertices, ordered by designated member.
std::vector<FreeTree> enumerate_free(unsigned n);

// Non-superfluous free trees with 2..n+1 vertices and max branching <= m.
std::vector<FreeTree> conditions_up_to(unsigned n, unsigned m);

using Forest = std::vector<RootedTree>;

struct ButcherTableau {
  RealMatrix A;
  RealVec b;
  RealVec c;
  unsigned precision_digits = kDefaultPrecisionDigits;

  unsigned stages() const { return static_cast<unsigned>(b.size()); }
  // max_i |sum_j a_ij - c_i|
  Real rowsum_defect() const;
};

// Elementary weight of one tree: b^T g(t), g(*) = 1, g([t_1..t_k]) is the
// componentwise product of A g(t_j).
Real rk_weight(const RootedTree& t, const ButcherTableau& tab);
// Product of the member weights.
Real rk_weight(const Forest& forest, const ButcherTableau& tab);

// sum over members u of (-1)^kappa / sigma(u) * a(B_-(u)); zero for
// superfluous classes.
Real energy_condition_residual(const FreeTree& ft, const ButcherTableau& tab);

}  // namespace eprk
