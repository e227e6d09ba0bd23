#include "blsos/prover.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "blsos/holder.hpp"
#include "blsos/polytope.hpp"

namespace blsos::prover {
namespace {

using certificate::Builder;
using certificate::CertKind;
using certificate::EqTerm;
using certificate::Piece;
using exactalg::LinearMap;
using exactalg::Mat;
using exactalg::Vec;
using holder::Fragment;
using polyring::Monomial;
using polyring::Polynomial;

// ---------------------------------------------------------------------------
// Exact arithmetic helpers
// ---------------------------------------------------------------------------

void require(bool ok, const std::string& message) {
  if (!ok) throw InternalError(message);
}

long to_long(const mpz_class& z) {
  require(z.fits_slong_p(), "integer exceeds the machine word range");
  return z.get_si();
}

long rational_to_integer(const Rational& q, const std::string& what) {
  require(q.get_den() == 1, what + " is not an integer");
  return to_long(q.get_num());
}

long denominator_of(const Rational& q) { return to_long(q.get_den()); }

long lcm_long(long a, long b) {
  require(a > 0 && b > 0, "lcm of nonpositive values");
  return std::lcm(a, b);
}

unsigned upow(long e) {
  require(e >= 0 && e <= 1000000, "polynomial exponent out of range");
  return static_cast<unsigned>(e);
}

Polynomial poly_one() { return Polynomial(1); }

Polynomial poly_pow(const Polynomial& p, long e) {
  if (e == 0) return poly_one();
  if (e == 1) return p;
  return p.pow(upow(e));
}

// ---------------------------------------------------------------------------
// Node tasks and atom tables
//
// A node task is a sub-instance handled during emission: maps, a finite
// domain, and an exponent vector with entries in (0, 1] written as reduced
// numerators `sigma` over the common denominator `sv`.  The table entry
// atoms[j][y] is the visibly even polynomial standing for the value of the
// j-th factor at image point y.  emit_node certifies, for a contract power
// E divisible by every planned constraint,
//
//   (sum_x prod_j atoms[j][B_j x]^{(E/sv) sigma_j})^P
//       <= prod_j (sum_y atoms[j][y]^E)^{(P/sv) sigma_j}
//
// and returns the fragment together with its claim power P (a multiple of
// sv chosen by the construction).
// ---------------------------------------------------------------------------

using AtomTable = std::map<std::vector<long>, Polynomial>;

struct NodeTask {
  datum::BLDatum d;
  std::vector<long> sigma;
  long sv = 1;
};

NodeTask make_task(datum::BLDatum d) {
  NodeTask t;
  t.sigma = d.exponents.s_list;
  t.sv = d.exponents.s;
  for (long e : t.sigma) require(e >= 1, "node task has a zero exponent");
  t.d = std::move(d);
  return t;
}

const Polynomial& atom_at(const std::vector<AtomTable>& atoms, std::size_t j,
                          const std::vector<long>& key) {
  auto it = atoms[j].find(key);
  require(it != atoms[j].end(), "missing atom table entry");
  return it->second;
}

/// prod_j atoms[j][B_j x]^{exps[j]} for one domain point.
Polynomial term_at(const NodeTask& task, const std::vector<AtomTable>& atoms,
                   const std::vector<long>& x, const std::vector<long>& exps) {
  Polynomial out = poly_one();
  for (std::size_t j = 0; j < task.d.m(); ++j) {
    if (exps[j] == 0) continue;
    out *= poly_pow(atom_at(atoms, j, task.d.map_point(j, x)), exps[j]);
  }
  return out;
}

Polynomial base_poly(const NodeTask& task, const std::vector<AtomTable>& atoms,
                     const std::vector<long>& exps) {
  Polynomial out;
  for (const auto& x : task.d.domain.points()) {
    out += term_at(task, atoms, x, exps);
  }
  return out;
}

Polynomial norm_poly(const NodeTask& task, const std::vector<AtomTable>& atoms,
                     std::size_t j, long e) {
  Polynomial out;
  for (const auto& y : task.d.image_points(j)) {
    out += poly_pow(atom_at(atoms, j, y), e);
  }
  return out;
}

std::vector<long> scaled_sigma(const NodeTask& task, long factor) {
  std::vector<long> exps(task.sigma.size());
  for (std::size_t j = 0; j < task.sigma.size(); ++j) {
    exps[j] = factor * task.sigma[j];
  }
  return exps;
}

// ---------------------------------------------------------------------------
// Fragment combinators.  Every fragment satisfies
//   prod(multiplier) * (rhs - lhs) == sum(pieces) + sum(eq_terms)
// exactly, with lhs and rhs visibly nonnegative.
// ---------------------------------------------------------------------------

/// sum_{i<t} high^{t-1-i} low^i, the cofactor of (high - low) in the
/// difference of t-th powers.
Polynomial telescope(const Polynomial& high, const Polynomial& low, long t) {
  Polynomial out;
  for (long i = 0; i < t; ++i) {
    out += poly_pow(high, t - 1 - i) * poly_pow(low, i);
  }
  return out;
}

/// (lhs <= rhs) to (lhs^t <= rhs^t).
Fragment power_fragment(Builder& b, const Fragment& frag, long t) {
  require(t >= 1, "fragment power must be positive");
  if (t == 1) return frag;
  Fragment out;
  out.lhs = poly_pow(frag.lhs, t);
  out.rhs = poly_pow(frag.rhs, t);
  out.multiplier = frag.multiplier;
  out.trace = frag.trace;
  if (frag.pieces.empty() && frag.eq_terms.empty()) return out;
  const Polynomial tel = telescope(frag.rhs, frag.lhs, t);
  const std::size_t tel_sos = holder::pool_even_sos(b, tel);
  const std::size_t tel_poly = b.pool(tel);
  out.pieces = frag.pieces;
  for (Piece& piece : out.pieces) piece.cofactors.push_back(tel_sos);
  out.eq_terms = frag.eq_terms;
  for (EqTerm& eq : out.eq_terms) eq.polys.push_back(tel_poly);
  return out;
}

/// (lhs_root^t <= rhs_root^t) to (lhs_root <= rhs_root): the power
/// telescope joins the left multiplier instead of the pieces.
Fragment root_fragment(Builder& b, const Fragment& frag,
                       const Polynomial& lhs_root, const Polynomial& rhs_root,
                       long t) {
  require(t >= 1, "fragment root must be positive");
  require(frag.lhs == poly_pow(lhs_root, t), "fragment left root mismatch");
  require(frag.rhs == poly_pow(rhs_root, t), "fragment right root mismatch");
  if (t == 1) return frag;
  Fragment out;
  out.lhs = lhs_root;
  out.rhs = rhs_root;
  out.multiplier = frag.multiplier;
  out.multiplier.push_back(
      holder::pool_even_sos(b, telescope(rhs_root, lhs_root, t)));
  out.pieces = frag.pieces;
  out.eq_terms = frag.eq_terms;
  out.trace = frag.trace;
  return out;
}

/// Componentwise product of claims: prod lhs_i <= prod rhs_i.  The i-th
/// pieces gain the other multipliers plus the replaced prefix (rhs) and
/// pending suffix (lhs) factors of the product telescope.
Fragment prod_fragment(Builder& b, const std::vector<Fragment>& parts) {
  require(!parts.empty(), "empty fragment product");
  if (parts.size() == 1) return parts.front();
  Fragment out;
  out.lhs = poly_one();
  out.rhs = poly_one();
  for (const Fragment& part : parts) {
    out.lhs *= part.lhs;
    out.rhs *= part.rhs;
    out.multiplier.insert(out.multiplier.end(), part.multiplier.begin(),
                          part.multiplier.end());
    out.trace.insert(out.trace.end(), part.trace.begin(), part.trace.end());
  }
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].pieces.empty() && parts[i].eq_terms.empty()) continue;
    std::vector<std::size_t> sibling_mults;
    std::vector<std::size_t> factor_sos;
    std::vector<std::size_t> factor_polys;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (k == i) continue;
      sibling_mults.insert(sibling_mults.end(), parts[k].multiplier.begin(),
                           parts[k].multiplier.end());
      const Polynomial& factor = (k < i) ? parts[k].rhs : parts[k].lhs;
      if (factor == poly_one()) continue;
      factor_sos.push_back(holder::pool_even_sos(b, factor));
      factor_polys.push_back(b.pool(factor));
    }
    for (Piece piece : parts[i].pieces) {
      piece.cofactors.insert(piece.cofactors.end(), sibling_mults.begin(),
                             sibling_mults.end());
      piece.cofactors.insert(piece.cofactors.end(), factor_sos.begin(),
                             factor_sos.end());
      out.pieces.push_back(std::move(piece));
    }
    for (EqTerm eq : parts[i].eq_terms) {
      eq.cofactors.insert(eq.cofactors.end(), sibling_mults.begin(),
                          sibling_mults.end());
      eq.polys.insert(eq.polys.end(), factor_polys.begin(),
                      factor_polys.end());
      out.eq_terms.push_back(std::move(eq));
    }
  }
  return out;
}

/// Componentwise sum of claims: sum lhs_i <= sum rhs_i.
Fragment sum_fragment(const std::vector<Fragment>& parts) {
  require(!parts.empty(), "empty fragment sum");
  if (parts.size() == 1) return parts.front();
  Fragment out;
  for (const Fragment& part : parts) {
    out.lhs += part.lhs;
    out.rhs += part.rhs;
    out.multiplier.insert(out.multiplier.end(), part.multiplier.begin(),
                          part.multiplier.end());
    out.trace.insert(out.trace.end(), part.trace.begin(), part.trace.end());
  }
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].pieces.empty() && parts[i].eq_terms.empty()) continue;
    std::vector<std::size_t> sibling_mults;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (k == i) continue;
      sibling_mults.insert(sibling_mults.end(), parts[k].multiplier.begin(),
                           parts[k].multiplier.end());
    }
    for (Piece piece : parts[i].pieces) {
      piece.cofactors.insert(piece.cofactors.end(), sibling_mults.begin(),
                             sibling_mults.end());
      out.pieces.push_back(std::move(piece));
    }
    for (EqTerm eq : parts[i].eq_terms) {
      eq.cofactors.insert(eq.cofactors.end(), sibling_mults.begin(),
                          sibling_mults.end());
      out.eq_terms.push_back(std::move(eq));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Split context: the concrete data of one critical-subspace split
// ---------------------------------------------------------------------------

struct SplitContext {
  SplitData data;
  /// original[qi][fi] is the domain point whose complement component is the
  /// qi-th quotient point and whose W component is the fi-th fiber point.
  std::vector<std::vector<std::vector<long>>> original;
  /// Per map j: quotient image point -> class label of the matching coset.
  std::vector<std::map<std::vector<long>, std::vector<long>>> quot_label;
};

std::vector<long> scale_coords(const Vec& v, long scale) {
  std::vector<long> out;
  out.reserve(v.size());
  for (const Rational& q : v) {
    out.push_back(rational_to_integer(q * Rational(scale), "scaled coordinate"));
  }
  return out;
}

Mat scale_matrix(const Mat& m, const Rational& factor) {
  Mat out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out.at(r, c) = m.at(r, c) * factor;
    }
  }
  return out;
}

SplitContext build_split_context(const datum::BLDatum& d, const Subspace& w) {
  if (w.ambient_dim() != d.n) {
    throw DimensionError("split subspace lives in the wrong ambient space");
  }
  if (w.dim() == 0 || w.dim() >= d.n) {
    throw DomainError("split subspace must be nontrivial and proper");
  }
  const Subspace full = Subspace::full(d.n);
  std::vector<exactalg::SplitMaps> sm;
  sm.reserve(d.m());
  for (std::size_t j = 0; j < d.m(); ++j) {
    sm.push_back(exactalg::restrict_and_quotient(d.maps[j], w, full));
  }

  // Decompose every domain point into W and complement coordinates and
  // demand an exact product structure.
  const auto& pts = d.domain.points();
  std::set<Vec> fiber_set;
  std::set<Vec> quot_set;
  std::map<std::pair<Vec, Vec>, std::vector<long>> point_of;
  for (const auto& x : pts) {
    Vec xr;
    xr.reserve(x.size());
    for (long c : x) xr.push_back(Rational(c));
    auto [a, bq] = sm.front().split_point(xr);
    fiber_set.insert(a);
    quot_set.insert(bq);
    point_of[{a, bq}] = x;
  }
  if (fiber_set.size() * quot_set.size() != pts.size()) {
    throw DomainError("domain not product-decomposable along W");
  }
  for (const Vec& a : fiber_set) {
    for (const Vec& bq : quot_set) {
      if (!point_of.count({a, bq})) {
        throw DomainError("domain not product-decomposable along W");
      }
    }
  }

  // Clear the coordinate denominators with one positive scale per factor;
  // scaling preserves the lexicographic point order and all collisions.
  long fiber_scale = 1;
  for (const Vec& a : fiber_set) {
    for (const Rational& q : a) fiber_scale = lcm_long(fiber_scale, denominator_of(q));
  }
  long quot_scale = 1;
  for (const Vec& bq : quot_set) {
    for (const Rational& q : bq) quot_scale = lcm_long(quot_scale, denominator_of(q));
  }
  std::vector<std::vector<long>> fiber_pts;
  for (const Vec& a : fiber_set) fiber_pts.push_back(scale_coords(a, fiber_scale));
  std::vector<std::vector<long>> quot_pts;
  for (const Vec& bq : quot_set) quot_pts.push_back(scale_coords(bq, quot_scale));

  std::vector<LinearMap> fiber_maps;
  std::vector<LinearMap> quot_maps;
  for (std::size_t j = 0; j < d.m(); ++j) {
    fiber_maps.emplace_back(
        scale_matrix(sm[j].restricted.matrix, Rational(1, fiber_scale)));
    quot_maps.emplace_back(
        scale_matrix(sm[j].quotient.matrix, Rational(1, quot_scale)));
  }

  SplitContext ctx;
  ctx.data.w = w;
  ctx.data.datum_w =
      datum::make_datum(w.dim(), fiber_maps, d.exponents.p,
                        datum::DomainSpec::points(fiber_pts, w.dim()));
  ctx.data.datum_q =
      datum::make_datum(d.n - w.dim(), quot_maps, d.exponents.p,
                        datum::DomainSpec::points(quot_pts, d.n - w.dim()));

  // Image classes modulo B_j W, labeled by their lexicographically least
  // member (the scan below visits image points in sorted order).
  ctx.data.classes.resize(d.m());
  std::vector<std::map<std::vector<long>, std::vector<long>>> label_of(d.m());
  for (std::size_t j = 0; j < d.m(); ++j) {
    const Subspace image_w = exactalg::kernel_image(d.maps[j], w).image;
    std::vector<std::vector<long>> labels;
    for (const auto& y : d.image_points(j)) {
      Vec yr;
      const std::vector<long>* found = nullptr;
      for (const auto& label : labels) {
        Vec diff;
        diff.reserve(y.size());
        for (std::size_t c = 0; c < y.size(); ++c) {
          diff.push_back(Rational(y[c] - label[c]));
        }
        if (image_w.contains(diff)) {
          found = &label;
          break;
        }
      }
      if (found == nullptr) {
        labels.push_back(y);
        found = &labels.back();
      }
      ctx.data.classes[j][*found].push_back(y);
      label_of[j][y] = *found;
    }
  }

  // Align the product grid with the canonical (sorted) domain orders of the
  // two factor instances, and key every quotient image point to its class.
  const auto& fdom = ctx.data.datum_w.domain.points();
  const auto& qdom = ctx.data.datum_q.domain.points();
  require(fdom.size() == fiber_set.size() && qdom.size() == quot_set.size(),
          "factor domains lost points");
  std::vector<Vec> fiber_order(fiber_set.begin(), fiber_set.end());
  std::vector<Vec> quot_order(quot_set.begin(), quot_set.end());
  ctx.original.assign(qdom.size(), {});
  ctx.quot_label.resize(d.m());
  for (std::size_t qi = 0; qi < qdom.size(); ++qi) {
    ctx.original[qi].resize(fdom.size());
    for (std::size_t fi = 0; fi < fdom.size(); ++fi) {
      const auto it = point_of.find({fiber_order[fi], quot_order[qi]});
      require(it != point_of.end(), "product grid misses a point");
      ctx.original[qi][fi] = it->second;
    }
    for (std::size_t j = 0; j < d.m(); ++j) {
      const auto qkey = ctx.data.datum_q.map_point(j, qdom[qi]);
      const auto label = label_of[j].at(d.map_point(j, ctx.original[qi][0]));
      const auto stored = ctx.quot_label[j].find(qkey);
      if (stored == ctx.quot_label[j].end()) {
        ctx.quot_label[j][qkey] = label;
      } else {
        require(stored->second == label,
                "quotient image does not determine the coset class");
      }
    }
  }
  for (std::size_t j = 0; j < d.m(); ++j) {
    require(ctx.quot_label[j].size() == ctx.data.classes[j].size(),
            "coset classes and quotient images disagree");
  }
  return ctx;
}

// ---------------------------------------------------------------------------
// Node plans.  Planning decides the construction shape and the minimal
// admissible contract power before any certificate step is emitted, so the
// emission can run at one aligned power throughout.
// ---------------------------------------------------------------------------

struct NodePlanData;
using NodePlanPtr = std::unique_ptr<NodePlanData>;

struct SplitPlan {
  SplitContext ctx;
  NodeTask inner_task;
  NodeTask quotient_task;
  NodePlanPtr inner;
  NodePlanPtr quotient;
};

struct FoldChild {
  NodeTask task;
  NodePlanPtr plan;
  Vec pi;  ///< exponent vector on the parent index set (zeros allowed)
  Rational theta;
  std::vector<std::size_t> maps;  ///< parent indices kept by this child
};

/// Shape of the blend: a full binary tree over the children.  Blending
/// pairwise keeps the link ratios simple (a balanced tree over four
/// quarter-weight children needs only halving ratios, where a chain would
/// pass through thirds), which keeps the common contract power small.
struct FoldTree {
  int leaf = -1;  ///< child index at a leaf, -1 at internal nodes
  std::shared_ptr<const FoldTree> a;
  std::shared_ptr<const FoldTree> b;
  Rational weight;  ///< sum of the leaf weights below this node
  Vec q;            ///< weighted average of the leaf exponent vectors
};

struct FoldPlan {
  std::vector<FoldChild> children;
  std::shared_ptr<const FoldTree> tree;
};

struct NodePlanData {
  enum class Kind { Single, ZeroOne, Split, Fold } kind = Kind::Single;
  long e_min = 1;
  std::optional<SplitPlan> split;
  std::optional<FoldPlan> fold;
};

bool subspace_is_critical(const NodeTask& task, const Subspace& w) {
  if (w.dim() == 0 || w.dim() >= task.d.n) return false;
  Rational need(0);
  for (std::size_t j = 0; j < task.d.m(); ++j) {
    const auto ki = exactalg::kernel_image(task.d.maps[j], w);
    need += task.d.exponents.p[j] * Rational(static_cast<long>(ki.image.dim()));
  }
  return need == Rational(static_cast<long>(w.dim()));
}

/// Divisibility constraints of one blend tree: at every internal node with
/// reduced weight ratio alpha/d the two side exponent vectors divided by d
/// must clear their denominators, and every leaf needs its own common
/// denominator.
long fold_divisor(const std::vector<FoldChild>& children, const FoldTree& t) {
  if (t.leaf >= 0) return children[std::size_t(t.leaf)].task.sv;
  long div = lcm_long(fold_divisor(children, *t.a),
                      fold_divisor(children, *t.b));
  const Rational ratio = t.a->weight / t.weight;
  const long d = denominator_of(ratio);
  for (const Rational& qa : t.a->q) {
    div = lcm_long(div, denominator_of(qa / Rational(d)));
  }
  for (const Rational& qb : t.b->q) {
    div = lcm_long(div, denominator_of(qb / Rational(d)));
  }
  return div;
}

/// All full binary trees over the child subset given by `mask`, with the
/// lowest child kept on the left branch to skip mirror duplicates (the
/// divisor is mirror-symmetric).  Deterministic enumeration order.
std::vector<std::shared_ptr<const FoldTree>> enumerate_fold_trees(
    const std::vector<FoldChild>& children, unsigned mask,
    std::map<unsigned, std::vector<std::shared_ptr<const FoldTree>>>& memo) {
  auto found = memo.find(mask);
  if (found != memo.end()) return found->second;
  std::vector<std::shared_ptr<const FoldTree>> out;
  if ((mask & (mask - 1)) == 0) {
    int leaf = 0;
    while (!(mask & (1u << leaf))) ++leaf;
    auto node = std::make_shared<FoldTree>();
    node->leaf = leaf;
    node->weight = children[std::size_t(leaf)].theta;
    node->q = children[std::size_t(leaf)].pi;
    out.push_back(std::move(node));
  } else {
    const unsigned low = mask & ~(mask - 1);
    for (unsigned sub = (mask - 1) & mask; sub > 0; sub = (sub - 1) & mask) {
      if (!(sub & low) || sub == mask) continue;
      const unsigned rest = mask & ~sub;
      for (const auto& left : enumerate_fold_trees(children, sub, memo)) {
        for (const auto& right : enumerate_fold_trees(children, rest, memo)) {
          auto node = std::make_shared<FoldTree>();
          node->a = left;
          node->b = right;
          node->weight = left->weight + right->weight;
          node->q.resize(left->q.size());
          for (std::size_t j = 0; j < node->q.size(); ++j) {
            node->q[j] = (left->weight * left->q[j] +
                          right->weight * right->q[j]) /
                         node->weight;
          }
          out.push_back(std::move(node));
        }
      }
    }
  }
  memo.emplace(mask, out);
  return out;
}

NodePlanPtr build_plan(const NodeTask& task, const ProveOptions& options) {
  auto plan = std::make_unique<NodePlanData>();
  const std::size_t m = task.d.m();

  if (task.d.domain.points().size() == 1) {
    plan->kind = NodePlanData::Kind::Single;
    plan->e_min = task.sv;
    return plan;
  }
  if (task.sv == 1) {
    plan->kind = NodePlanData::Kind::ZeroOne;
    plan->e_min = 1;
    return plan;
  }

  const auto family = datum::subspace_candidates(task.d, options.subspace_budget);

  // Critical-subspace split, first usable candidate in canonical order.
  for (const Subspace& w : family.subspaces) {
    if (!subspace_is_critical(task, w)) continue;
    SplitPlan sp;
    try {
      sp.ctx = build_split_context(task.d, w);
    } catch (const DomainError&) {
      continue;  // not product-decomposable along this candidate
    }
    sp.inner_task = make_task(sp.ctx.data.datum_w);
    sp.quotient_task = make_task(sp.ctx.data.datum_q);
    require(sp.inner_task.sv == task.sv && sp.inner_task.sigma == task.sigma,
            "fiber task changed the exponent vector");
    require(sp.quotient_task.sv == task.sv && sp.quotient_task.sigma == task.sigma,
            "quotient task changed the exponent vector");
    sp.inner = build_plan(sp.inner_task, options);
    sp.quotient = build_plan(sp.quotient_task, options);
    plan->kind = NodePlanData::Kind::Split;
    plan->e_min = lcm_long(task.sv,
                           lcm_long(sp.inner->e_min, sp.quotient->e_min));
    plan->split.emplace(std::move(sp));
    return plan;
  }

  // Blend over the vertices of the feasible polytope.
  const auto systems = polytope::build_systems(task.d, family);
  const auto vertices = polytope::enumerate_vertices(systems.qv, options.vertex_cap);
  const auto comb = polytope::decompose_convex(task.d.exponents.p, vertices);
  FoldPlan fp;
  for (std::size_t i = 0; i < comb.vertices.size(); ++i) {
    if (comb.weights[i] == Rational(0)) continue;
    FoldChild child;
    child.pi = comb.vertices[i].p;
    child.theta = comb.weights[i];
    std::vector<LinearMap> maps;
    std::vector<Rational> pvec;
    for (std::size_t j = 0; j < m; ++j) {
      if (child.pi[j] == Rational(0)) continue;
      child.maps.push_back(j);
      maps.push_back(task.d.maps[j]);
      pvec.push_back(child.pi[j]);
    }
    require(!child.maps.empty(), "blend vertex dropped every factor");
    child.task = make_task(datum::make_datum(task.d.n, maps, pvec, task.d.domain));
    child.plan = build_plan(child.task, options);
    fp.children.push_back(std::move(child));
  }
  if (fp.children.size() == 1) {
    throw InternalError(
        "no critical subspace at a non-binary vertex of the feasible "
        "polytope");
  }
  require(fp.children.size() <= 5, "blend width exceeds the planner limit");

  // Search the blend tree shape for the smallest contract power.
  long child_lcm = task.sv;
  for (const FoldChild& child : fp.children) {
    child_lcm = lcm_long(child_lcm, child.plan->e_min);
  }
  std::map<unsigned, std::vector<std::shared_ptr<const FoldTree>>> memo;
  const unsigned full_mask = (1u << fp.children.size()) - 1;
  std::shared_ptr<const FoldTree> best_tree;
  long best = 0;
  for (const auto& tree : enumerate_fold_trees(fp.children, full_mask, memo)) {
    const long e = lcm_long(child_lcm, fold_divisor(fp.children, *tree));
    if (best == 0 || e < best) {
      best = e;
      best_tree = tree;
    }
  }
  require(best > 0 && best <= 512, "planned contract power is too large");
  for (std::size_t j = 0; j < m; ++j) {
    require(best_tree->q[j] == task.d.exponents.p[j],
            "blend did not reproduce the task exponents");
  }
  fp.tree = std::move(best_tree);
  plan->kind = NodePlanData::Kind::Fold;
  plan->e_min = best;
  plan->fold.emplace(std::move(fp));
  return plan;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

struct NodeResult {
  Fragment frag;
  long power = 1;
};

NodeResult emit_node(Builder& b, const NodeTask& task, const NodePlanData& plan,
                     const std::vector<AtomTable>& atoms, long e, int& aux_seq);

NodeResult emit_single(const NodeTask& task, const std::vector<AtomTable>& atoms,
                       long e) {
  require(task.d.domain.points().size() == 1, "single-point node expected");
  require(e % task.sv == 0, "contract power misses the node denominator");
  const Polynomial base =
      term_at(task, atoms, task.d.domain.points().front(),
              scaled_sigma(task, e / task.sv));
  Fragment frag;
  frag.lhs = poly_pow(base, task.sv);
  frag.rhs = frag.lhs;
  frag.trace = {"equality"};
  return {std::move(frag), task.sv};
}

NodeResult emit_zero_one(Builder& b, const NodeTask& task,
                         const std::vector<AtomTable>& atoms, long e) {
  require(task.sv == 1, "binary node expected");
  const std::size_t m = task.d.m();
  const auto& pts = task.d.domain.points();

  // The joint image map must be injective; a collision exhibits an
  // infeasible exponent vector that slipped past the candidate family.
  std::set<std::vector<std::vector<long>>> hits;
  for (const auto& x : pts) {
    std::vector<std::vector<long>> tuple;
    tuple.reserve(m);
    for (std::size_t j = 0; j < m; ++j) tuple.push_back(task.d.map_point(j, x));
    if (!hits.insert(std::move(tuple)).second) {
      throw InternalError(
          "binary sub-task is not injective; the exponent vector lies "
          "outside the feasible polytope");
    }
  }

  std::vector<std::vector<std::vector<long>>> images(m);
  std::size_t grid = 1;
  for (std::size_t j = 0; j < m; ++j) {
    images[j] = task.d.image_points(j);
    grid *= images[j].size();
    require(grid <= 200000, "binary leftover grid is too large");
  }
  std::vector<std::vector<std::size_t>> atom_sos(m);
  Fragment frag;
  frag.lhs = base_poly(task, atoms, std::vector<long>(m, e));
  frag.rhs = poly_one();
  for (std::size_t j = 0; j < m; ++j) {
    frag.rhs *= norm_poly(task, atoms, j, e);
    atom_sos[j].reserve(images[j].size());
    for (const auto& y : images[j]) {
      atom_sos[j].push_back(
          holder::pool_even_sos(b, poly_pow(atom_at(atoms, j, y), e)));
    }
  }

  std::vector<std::size_t> pick(m, 0);
  std::vector<std::vector<long>> tuple(m);
  std::size_t leftovers = 0;
  while (true) {
    for (std::size_t j = 0; j < m; ++j) tuple[j] = images[j][pick[j]];
    if (!hits.count(tuple)) {
      Piece piece;
      for (std::size_t j = 0; j < m; ++j) {
        piece.cofactors.push_back(atom_sos[j][pick[j]]);
      }
      frag.pieces.push_back(std::move(piece));
      ++leftovers;
    }
    std::size_t j = m;
    while (j > 0 && ++pick[j - 1] == images[j - 1].size()) {
      pick[j - 1] = 0;
      --j;
    }
    if (j == 0) break;
  }
  frag.trace = {"leftover(" + std::to_string(leftovers) + ")"};
  return {std::move(frag), 1};
}

NodeResult emit_fold(Builder& b, const NodeTask& task, const NodePlanData& plan,
                     const std::vector<AtomTable>& atoms, long e, int& aux_seq) {
  const FoldPlan& fp = *plan.fold;
  const std::size_t m = task.d.m();
  require(e % task.sv == 0, "contract power misses the node denominator");

  // Each subtree certifies base_q^D <= prod_j N_j^{D q_j} for its weighted
  // average exponent vector q, where base_q = sum_x prod_j atoms^{e q_j};
  // an internal node joins its sides with one power-mean link.
  auto emit_tree = [&](auto&& self,
                       const FoldTree& t) -> NodeResult {
    if (t.leaf >= 0) {
      const FoldChild& ch = fp.children[std::size_t(t.leaf)];
      std::vector<AtomTable> child_atoms;
      child_atoms.reserve(ch.maps.size());
      for (std::size_t pj : ch.maps) child_atoms.push_back(atoms[pj]);
      return emit_node(b, ch.task, *ch.plan, child_atoms, e, aux_seq);
    }
    NodeResult left = self(self, *t.a);
    NodeResult right = self(self, *t.b);

    const Rational ratio = t.a->weight / t.weight;
    const long alpha = to_long(ratio.get_num());
    const long d = to_long(ratio.get_den());
    const long beta = d - alpha;
    require(alpha >= 1 && beta >= 1, "degenerate blend ratio");

    std::vector<long> u_exp(m, 0);
    std::vector<long> w_exp(m, 0);
    for (std::size_t j = 0; j < m; ++j) {
      u_exp[j] = rational_to_integer(Rational(e) * t.a->q[j] / Rational(d),
                                     "blend side exponent");
      w_exp[j] = rational_to_integer(Rational(e) * t.b->q[j] / Rational(d),
                                     "blend side exponent");
    }
    std::vector<Polynomial> u_atoms;
    std::vector<Polynomial> w_atoms;
    for (const auto& x : task.d.domain.points()) {
      u_atoms.push_back(term_at(task, atoms, x, u_exp));
      w_atoms.push_back(term_at(task, atoms, x, w_exp));
    }
    Fragment link = holder::emit_pair(b, alpha, beta, u_atoms, w_atoms, aux_seq);

    const long lift = lcm_long(left.power / std::gcd(left.power, alpha),
                               right.power / std::gcd(right.power, beta));
    Fragment link_pow = power_fragment(b, link, lift);
    Fragment left_pow = power_fragment(b, left.frag, alpha * lift / left.power);
    Fragment right_pow =
        power_fragment(b, right.frag, beta * lift / right.power);
    Fragment upper = prod_fragment(b, {left_pow, right_pow});
    Fragment joined = holder::compose_chain(b, upper, link_pow);
    const long power = d * lift;
    require(power <= 16384, "blend claim power is too large");
    return {std::move(joined), power};
  };

  require(fp.tree->weight == Rational(1), "blend weights do not sum to one");
  NodeResult out = emit_tree(emit_tree, *fp.tree);
  out.frag.trace.insert(out.frag.trace.begin(),
                        "blend(" + std::to_string(fp.children.size()) + ")");
  return out;
}

NodeResult emit_split(Builder& b, const NodeTask& task, const NodePlanData& plan,
                      const std::vector<AtomTable>& atoms, long e, int& aux_seq) {
  const SplitPlan& sp = *plan.split;
  const SplitContext& ctx = sp.ctx;
  const std::size_t m = task.d.m();
  require(e % task.sv == 0, "contract power misses the node denominator");
  const long lam = e / task.sv;

  // One auxiliary 2e-th root per non-singleton coset class: h^{2e} equals
  // the class sum, so h^2 stands for the class in the quotient instance.
  struct ClassAtom {
    bool aux = false;
    std::size_t step = 0;
    Polynomial atom;       // h^2, or the single member's atom
    Polynomial atom_e;     // atom^e
    Polynomial class_sum;  // sum of member atoms^e
  };
  std::vector<std::map<std::vector<long>, ClassAtom>> bar(m);
  std::vector<std::map<std::vector<long>, std::vector<long>>> label_of(m);
  for (std::size_t j = 0; j < m; ++j) {
    for (const auto& [label, members] : ctx.data.classes[j]) {
      for (const auto& y : members) label_of[j][y] = label;
      ClassAtom ca;
      if (members.size() == 1) {
        ca.atom = atom_at(atoms, j, members.front());
        ca.atom_e = poly_pow(ca.atom, e);
        ca.class_sum = ca.atom_e;
      } else {
        Polynomial class_sum;
        for (const auto& y : members) {
          class_sum += poly_pow(atom_at(atoms, j, y), e);
        }
        const polyring::Var h = polyring::aux_var(aux_seq++, "h");
        ca.aux = true;
        ca.step = b.define_aux(h, 2 * e, class_sum);
        ca.atom = Polynomial::monomial(Monomial::variable(h, 2));
        ca.atom_e = Polynomial::monomial(Monomial::variable(h, upow(2 * e)));
        ca.class_sum = std::move(class_sum);
      }
      bar[j].emplace(label, std::move(ca));
    }
  }

  // Fiber bound per quotient point, rewritten onto the class atoms and
  // rooted to a linear claim.
  const auto& fdom = ctx.data.datum_w.domain.points();
  const auto& qdom = ctx.data.datum_q.domain.points();
  std::vector<Fragment> linear;
  for (std::size_t qi = 0; qi < qdom.size(); ++qi) {
    std::vector<AtomTable> fiber_atoms(m);
    for (std::size_t fi = 0; fi < fdom.size(); ++fi) {
      const auto& x = ctx.original[qi][fi];
      for (std::size_t j = 0; j < m; ++j) {
        const auto key = ctx.data.datum_w.map_point(j, fdom[fi]);
        const auto& value = atom_at(atoms, j, task.d.map_point(j, x));
        const auto ins = fiber_atoms[j].emplace(key, value);
        if (!ins.second) {
          require(ins.first->second == value,
                  "fiber images collide on distinct atoms");
        }
      }
    }
    NodeResult inner =
        emit_node(b, sp.inner_task, *sp.inner, fiber_atoms, e, aux_seq);
    require(inner.power % task.sv == 0, "fiber claim power misaligned");

    std::vector<const ClassAtom*> coset(m);
    std::vector<long> ej(m);
    std::vector<Polynomial> factor_old(m);
    std::vector<Polynomial> factor_new(m);
    for (std::size_t j = 0; j < m; ++j) {
      const auto label = label_of[j].at(task.d.map_point(j, ctx.original[qi][0]));
      coset[j] = &bar[j].at(label);
      ej[j] = (inner.power / task.sv) * task.sigma[j];
      factor_old[j] = poly_pow(coset[j]->class_sum, ej[j]);
      factor_new[j] = poly_pow(coset[j]->atom_e, ej[j]);
    }
    Fragment fr = std::move(inner.frag);
    for (std::size_t j = 0; j < m; ++j) {
      if (!coset[j]->aux) continue;
      Polynomial cof = telescope(coset[j]->atom_e, coset[j]->class_sum, ej[j]);
      for (std::size_t k = 0; k < m; ++k) {
        if (k == j) continue;
        cof *= (k < j) ? factor_new[k] : factor_old[k];
      }
      EqTerm eq;
      eq.aux = coset[j]->step;
      eq.scale = Rational(1);
      eq.polys.push_back(b.pool(cof));
      eq.cofactors = fr.multiplier;
      fr.eq_terms.push_back(std::move(eq));
    }
    Polynomial new_rhs = poly_one();
    for (std::size_t j = 0; j < m; ++j) new_rhs *= factor_new[j];
    fr.rhs = std::move(new_rhs);

    const Polynomial x_base =
        base_poly(sp.inner_task, fiber_atoms, scaled_sigma(task, lam));
    Polynomial y_base = poly_one();
    for (std::size_t j = 0; j < m; ++j) {
      y_base *= poly_pow(coset[j]->atom, lam * task.sigma[j]);
    }
    linear.push_back(root_fragment(b, fr, x_base, y_base, inner.power));
  }
  Fragment summed = sum_fragment(linear);

  // Quotient bound over the class atoms, then the defining equations turn
  // the class-power norms back into the full norms.
  std::vector<AtomTable> quot_atoms(m);
  for (std::size_t j = 0; j < m; ++j) {
    for (const auto& [qkey, label] : ctx.quot_label[j]) {
      quot_atoms[j].emplace(qkey, bar[j].at(label).atom);
    }
  }
  NodeResult quot =
      emit_node(b, sp.quotient_task, *sp.quotient, quot_atoms, e, aux_seq);
  require(quot.power % task.sv == 0, "quotient claim power misaligned");
  Fragment qf = std::move(quot.frag);
  std::vector<long> eq_exp(m);
  std::vector<Polynomial> rbar(m);
  std::vector<Polynomial> nfull(m);
  for (std::size_t j = 0; j < m; ++j) {
    eq_exp[j] = (quot.power / task.sv) * task.sigma[j];
    rbar[j] = norm_poly(sp.quotient_task, quot_atoms, j, e);
    nfull[j] = norm_poly(task, atoms, j, e);
  }
  for (std::size_t j = 0; j < m; ++j) {
    bool any_aux = false;
    for (const auto& [label, ca] : bar[j]) any_aux = any_aux || ca.aux;
    if (!any_aux) {
      require(rbar[j] == nfull[j], "quotient norm mismatch on a split index");
      continue;
    }
    Polynomial cof = telescope(rbar[j], nfull[j], eq_exp[j]);
    for (std::size_t k = 0; k < m; ++k) {
      if (k == j) continue;
      cof *= poly_pow((k < j) ? nfull[k] : rbar[k], eq_exp[k]);
    }
    const std::size_t cof_pool = b.pool(cof);
    for (const auto& [label, ca] : bar[j]) {
      if (!ca.aux) continue;
      EqTerm eq;
      eq.aux = ca.step;
      eq.scale = Rational(-1);
      eq.polys.push_back(cof_pool);
      eq.cofactors = qf.multiplier;
      qf.eq_terms.push_back(std::move(eq));
    }
  }
  Polynomial target_rhs = poly_one();
  for (std::size_t j = 0; j < m; ++j) {
    target_rhs *= poly_pow(nfull[j], eq_exp[j]);
  }
  qf.rhs = std::move(target_rhs);

  Fragment lower = power_fragment(b, summed, quot.power);
  Fragment out = holder::compose_chain(b, qf, lower);
  out.trace.insert(out.trace.begin(),
                   "split(" + std::to_string(ctx.data.w.dim()) + ")");
  return {std::move(out), quot.power};
}

NodeResult emit_node(Builder& b, const NodeTask& task, const NodePlanData& plan,
                     const std::vector<AtomTable>& atoms, long e, int& aux_seq) {
  require(e % plan.e_min == 0, "contract power misses a planned constraint");
  switch (plan.kind) {
    case NodePlanData::Kind::Single:
      return emit_single(task, atoms, e);
    case NodePlanData::Kind::ZeroOne:
      return emit_zero_one(b, task, atoms, e);
    case NodePlanData::Kind::Fold:
      return emit_fold(b, task, plan, atoms, e, aux_seq);
    case NodePlanData::Kind::Split:
      return emit_split(b, task, plan, atoms, e, aux_seq);
  }
  throw InternalError("unhandled node plan kind");
}

// ---------------------------------------------------------------------------
// Top-level pipeline: clip exponents above one, plan and emit the core
// instance, link the clipped norms by norm monotonicity, root the claim to
// the common denominator, and peel the sup-norm indices with cap
// hypotheses.
// ---------------------------------------------------------------------------

Subspace difference_span(const datum::BLDatum& d) {
  const auto& pts = d.domain.points();
  std::vector<Vec> diffs;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    Vec v;
    v.reserve(d.n);
    for (std::size_t c = 0; c < d.n; ++c) {
      v.push_back(Rational(pts[i][c] - pts[0][c]));
    }
    diffs.push_back(std::move(v));
  }
  return Subspace::span(diffs, d.n);
}

Certificate pipeline(const datum::BLDatum& d, const ProveOptions& options) {
  const auto& p = d.exponents.p;
  const long s = d.exponents.s;
  const auto& s_list = d.exponents.s_list;
  const std::size_t m = d.m();
  if (s > options.max_denominator) {
    throw DomainError("exponent denominator " + std::to_string(s) +
                      " exceeds the cap " +
                      std::to_string(options.max_denominator));
  }

  const auto clip = polytope::clip_exponents(p);
  const std::set<std::size_t> clipped(clip.clipped.begin(), clip.clipped.end());
  std::vector<std::size_t> core_maps;
  std::vector<std::size_t> zeros;
  for (std::size_t j = 0; j < m; ++j) {
    (p[j] == Rational(0) ? zeros : core_maps).push_back(j);
  }

  // Plan the core before anything is emitted: the plan fixes the contract
  // power and thereby the encoding lift.
  std::optional<NodeTask> core_task;
  NodePlanPtr core_plan;
  long ec = 1;
  if (!core_maps.empty()) {
    std::vector<LinearMap> maps;
    std::vector<Rational> pc;
    for (std::size_t j : core_maps) {
      maps.push_back(d.maps[j]);
      pc.push_back(clip.p[j]);
    }
    core_task = make_task(datum::make_datum(d.n, maps, pc, d.domain));
    core_plan = build_plan(*core_task, options);
    ec = core_plan->e_min;
  } else if (d.domain.points().size() != 1) {
    throw InfeasibleError(
        "all-zero exponents are infeasible on a multi-point domain",
        difference_span(d));
  }

  long lam = 1;
  if (!core_maps.empty()) {
    lam = ec / std::gcd(ec, s);
    for (std::size_t j : clipped) {
      lam = lcm_long(lam, ec / std::gcd(ec, s_list[j]));
    }
  }

  Builder b(CertKind::BlInstance);
  b.bind_instance(d, lam);
  std::map<std::pair<std::size_t, std::vector<long>>, std::size_t> caps;
  for (std::size_t j : zeros) {
    for (const auto& y : d.image_points(j)) {
      caps[{j, y}] = b.declare_hypothesis(certificate::norm_cap_name(j, y),
                                          certificate::norm_cap_poly(j, y));
    }
  }
  int aux_seq = 0;

  // Core claim at the common denominator: lcore_base^s <= prod N_j^{s_j}.
  Fragment core_final;
  Polynomial lcore_base = poly_one();
  if (core_maps.empty()) {
    core_final.lhs = poly_one();
    core_final.rhs = poly_one();
    core_final.trace = {"equality"};
  } else {
    const NodeTask& task = *core_task;
    const long sprime = task.sv;
    std::vector<AtomTable> atoms(core_maps.size());
    for (std::size_t idx = 0; idx < core_maps.size(); ++idx) {
      const std::size_t j = core_maps[idx];
      long kappa = clipped.count(j) ? lam * s_list[j] : lam * s;
      require(kappa % ec == 0, "encoding lift misses the contract power");
      kappa /= ec;
      for (const auto& y : d.image_points(j)) {
        atoms[idx].emplace(
            y, Polynomial::monomial(Monomial::variable(
                   certificate::instance_root(j, y), upow(2 * kappa))));
      }
    }
    NodeResult res = emit_node(b, task, *core_plan, atoms, ec, aux_seq);
    require(res.power % sprime == 0, "core claim power misaligned");

    std::vector<long> ej(core_maps.size());
    long u = 1;
    for (std::size_t idx = 0; idx < core_maps.size(); ++idx) {
      ej[idx] = (res.power / sprime) * task.sigma[idx];
      const std::size_t j = core_maps[idx];
      if (!clipped.count(j)) continue;
      const long g = std::gcd(s_list[j], s);
      const long snm = s / g;
      u = lcm_long(u, snm / std::gcd(ej[idx], snm));
    }
    Fragment core_u = power_fragment(b, res.frag, u);

    std::vector<Fragment> factors;
    for (std::size_t idx = 0; idx < core_maps.size(); ++idx) {
      const std::size_t j = core_maps[idx];
      if (!clipped.count(j)) {
        Fragment same;
        same.lhs = poly_pow(norm_poly(task, atoms, idx, ec), ej[idx] * u);
        same.rhs = same.lhs;
        factors.push_back(std::move(same));
        continue;
      }
      const long g = std::gcd(s_list[j], s);
      const long sig = s_list[j] / g;
      const long snm = s / g;
      const long tau = lam * g;
      std::vector<Polynomial> nm_atoms;
      for (const auto& y : d.image_points(j)) {
        nm_atoms.push_back(Polynomial::monomial(Monomial::variable(
            certificate::instance_root(j, y), upow(2 * tau))));
      }
      Fragment link = holder::emit_norm_monotone(b, sig, snm, nm_atoms, aux_seq);
      link.trace.insert(link.trace.begin(),
                        "clip(" + std::to_string(j + 1) + ")");
      factors.push_back(power_fragment(b, link, ej[idx] * u / snm));
    }
    Fragment upper = prod_fragment(b, factors);
    Fragment full = holder::compose_chain(b, upper, core_u);

    require((res.power * u) % s == 0, "claim power misses the denominator");
    const long root = res.power * u / s;
    lcore_base = base_poly(task, atoms, scaled_sigma(task, ec / sprime));
    Polynomial root_rhs = poly_one();
    for (std::size_t idx = 0; idx < core_maps.size(); ++idx) {
      const std::size_t j = core_maps[idx];
      Polynomial norm_full;
      for (const auto& y : d.image_points(j)) {
        norm_full += Polynomial::monomial(Monomial::variable(
            certificate::instance_root(j, y), upow(2 * lam * s)));
      }
      root_rhs *= poly_pow(norm_full, s_list[j]);
    }
    core_final = root_fragment(b, full, poly_pow(lcore_base, s), root_rhs, root);
  }

  // Sup-norm peel: replace every zero-index factor by its cap variable,
  // one hypothesis piece per domain point and index, then power to s.
  Fragment final_frag;
  if (zeros.empty()) {
    final_frag = std::move(core_final);
  } else {
    Monomial caps_mono;
    for (std::size_t j : zeros) {
      caps_mono = caps_mono.times(
          Monomial::variable(certificate::norm_cap_var(j), upow(2 * lam)));
    }
    const Polynomial caps_poly = Polynomial::monomial(caps_mono);

    Fragment peel;
    peel.rhs = caps_poly * lcore_base;
    for (const auto& x : d.domain.points()) {
      Polynomial core_factor = poly_one();
      for (std::size_t j : core_maps) {
        core_factor *= Polynomial::monomial(Monomial::variable(
            certificate::instance_root(j, d.map_point(j, x)),
            upow(2 * lam * s_list[j])));
      }
      Polynomial zero_factor = poly_one();
      for (std::size_t j : zeros) {
        zero_factor *= Polynomial::monomial(Monomial::variable(
            certificate::instance_root(j, d.map_point(j, x)), upow(2 * lam)));
      }
      peel.lhs += zero_factor * core_factor;

      for (std::size_t zi = 0; zi < zeros.size(); ++zi) {
        const std::size_t j = zeros[zi];
        const auto y = d.map_point(j, x);
        const Polynomial cap_sq = Polynomial::monomial(
            Monomial::variable(certificate::norm_cap_var(j), 2));
        const Polynomial root_sq = Polynomial::monomial(
            Monomial::variable(certificate::instance_root(j, y), 2));
        Polynomial rest = core_factor;
        for (std::size_t k = 0; k < zeros.size(); ++k) {
          if (k == zi) continue;
          const std::size_t jk = zeros[k];
          rest *= (k < zi)
                      ? Polynomial::monomial(Monomial::variable(
                            certificate::norm_cap_var(jk), upow(2 * lam)))
                      : Polynomial::monomial(Monomial::variable(
                            certificate::instance_root(jk, d.map_point(jk, x)),
                            upow(2 * lam)));
        }
        Piece piece;
        piece.hypotheses.push_back(caps.at({j, y}));
        piece.cofactors.push_back(
            holder::pool_even_sos(b, telescope(cap_sq, root_sq, lam)));
        if (rest != poly_one()) {
          piece.cofactors.push_back(holder::pool_even_sos(b, rest));
        }
        peel.pieces.push_back(std::move(piece));
      }
    }
    for (std::size_t j : zeros) {
      peel.trace.push_back("peel(" + std::to_string(j + 1) + ")");
    }

    Fragment peel_s = power_fragment(b, peel, s);
    Fragment scaled =
        holder::scale_fragment(b, core_final, poly_pow(caps_poly, s));
    final_frag = holder::compose_chain(b, scaled, peel_s);
  }

  const Polynomial target = certificate::canonical_target(d, lam);
  require(final_frag.rhs - final_frag.lhs == target,
          "assembled chain does not match the instance target");
  b.conclude(final_frag.multiplier, final_frag.pieces, final_frag.eq_terms,
             final_frag.trace);
  return b.take();
}

}  // namespace

Certificate prove(const datum::BLDatum& d, const ProveOptions& options) {
  const auto family = datum::subspace_candidates(d, options.subspace_budget);
  const auto feas = datum::is_feasible(d, family);
  if (feas.status == datum::Feasibility::Status::Infeasible) {
    throw InfeasibleError("instance violates the dimension condition",
                          *feas.witness);
  }
  if (feas.status == datum::Feasibility::Status::Unknown &&
      !options.assume_feasible) {
    throw UnknownFeasibilityError(
        "feasibility undecided at this subspace budget");
  }
  return pipeline(d, options);
}

Certificate prove_vertex(const datum::BLDatum& d, const std::vector<Rational>& p,
                         const ProveOptions& options) {
  if (p.size() != d.m()) {
    throw DimensionError("exponent vector length does not match the maps");
  }
  return pipeline(datum::make_datum(d.n, d.maps, p, d.domain), options);
}

Certificate prove_zero_one(const datum::BLDatum& d,
                           const std::vector<Rational>& p,
                           const ProveOptions& options) {
  if (p.size() != d.m()) {
    throw DimensionError("exponent vector length does not match the maps");
  }
  for (const Rational& v : p) {
    if (v != Rational(0) && v != Rational(1)) {
      throw DomainError("exponents must be zero or one");
    }
  }
  // The joint map of the weight-one indices must be injective on the
  // domain, which is exactly: no domain difference lies in every kernel.
  Subspace shared = difference_span(d);
  for (std::size_t j = 0; j < d.m(); ++j) {
    if (p[j] != Rational(1)) continue;
    shared = exactalg::intersect(
        shared, exactalg::kernel_image(d.maps[j], std::nullopt).kernel);
  }
  if (shared.dim() > 0) {
    throw InfeasibleError(
        "binary exponents are infeasible: a domain difference lies in every "
        "selected kernel",
        shared);
  }
  return pipeline(datum::make_datum(d.n, d.maps, p, d.domain), options);
}

std::optional<Subspace> find_critical_subspace(
    const datum::BLDatum& d, const std::vector<Rational>& p,
    const datum::CandidateFamily& candidates) {
  if (p.size() != d.m()) {
    throw DimensionError("exponent vector length does not match the maps");
  }
  for (const Subspace& w : candidates.subspaces) {
    if (w.dim() == 0 || w.dim() >= d.n) continue;
    Rational need(0);
    for (std::size_t j = 0; j < d.m(); ++j) {
      const auto ki = exactalg::kernel_image(d.maps[j], w);
      need += p[j] * Rational(static_cast<long>(ki.image.dim()));
    }
    if (need == Rational(static_cast<long>(w.dim()))) return w;
  }
  return std::nullopt;
}

SplitData split_datum(const datum::BLDatum& d, const Subspace& w) {
  return build_split_context(d, w).data;
}

}  // namespace blsos::prover
