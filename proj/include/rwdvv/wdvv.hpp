#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rwdvv/errors.hpp"
#include "rwdvv/invariants.hpp"
#include "rwdvv/linalg.hpp"
#include "rwdvv/series.hpp"
#include "rwdvv/target.hpp"

namespace rwdvv {

// ---- residual evaluation ----------------------------------------------------

// Third t-partials of a potential, plus their pairing contraction
// A[a][b][j] = sum_i (d_a d_b d_i F) g^{ij}.
class PotentialPartials {
public:
    PotentialPartials(const Series& f, const RatMatrix& ginv) : n_(f.ring().num_t) {
        third_.resize(static_cast<size_t>(n_) * n_ * n_);
        contr_.resize(static_cast<size_t>(n_) * n_ * n_);
        for (int a = 0; a < n_; ++a) {
            Series fa = f.partial(Variable::t(a));
            for (int b = a; b < n_; ++b) {
                Series fab = fa.partial(Variable::t(b));
                for (int i = b; i < n_; ++i) {
                    Series fabi = fab.partial(Variable::t(i));
                    int idx[3] = {a, b, i};
                    std::sort(idx, idx + 3);
                    do {
                        third_[slot(idx[0], idx[1], idx[2])] = fabi;
                    } while (std::next_permutation(idx, idx + 3));
                }
            }
        }
        for (int a = 0; a < n_; ++a)
            for (int b = a; b < n_; ++b) {
                for (int j = 0; j < n_; ++j) {
                    Series acc(f.ring(), third_[0].truncation());
                    for (int i = 0; i < n_; ++i) {
                        const Rational& g = ginv(i, j);
                        if (g.is_zero()) continue;
                        acc = acc + g * third(a, b, i);
                    }
                    contr_[slot(a, b, j)] = acc;
                    contr_[slot(b, a, j)] = acc;
                }
            }
    }

    int n() const { return n_; }
    const Series& third(int a, int b, int i) const { return third_[slot(a, b, i)]; }
    const Series& contracted(int a, int b, int j) const { return contr_[slot(a, b, j)]; }

private:
    size_t slot(int a, int b, int i) const {
        return (static_cast<size_t>(a) * n_ + static_cast<size_t>(b)) * n_ + static_cast<size_t>(i);
    }
    int n_;
    std::vector<Series> third_, contr_;
};

// First and second partials of the real potential that the relations use.
class OmegaPartials {
public:
    explicit OmegaPartials(const Series& o) : n_(o.ring().num_t) {
        Series du = o.partial(Variable::u());
        duu_ = du.partial(Variable::u());
        dtu_.reserve(static_cast<size_t>(n_));
        for (int a = 0; a < n_; ++a) dtu_.push_back(du.partial(Variable::t(a)));
        d2_.resize(static_cast<size_t>(n_) * n_);
        for (int a = 0; a < n_; ++a) {
            Series da = o.partial(Variable::t(a));
            for (int b = a; b < n_; ++b) {
                Series dab = da.partial(Variable::t(b));
                d2_[static_cast<size_t>(a) * n_ + b] = dab;
                d2_[static_cast<size_t>(b) * n_ + a] = dab;
            }
        }
    }

    const Series& d2(int a, int b) const { return d2_[static_cast<size_t>(a) * n_ + b]; }
    const Series& dtu(int a) const { return dtu_[static_cast<size_t>(a)]; }
    const Series& duu() const { return duu_; }

private:
    int n_;
    std::vector<Series> d2_, dtu_;
    Series duu_;
};

namespace detail {

inline void require_index(int i, int n, const char* what) {
    if (i < 0 || i >= n) throw StructuralError(std::string(what) + ": index out of range");
}

} // namespace detail

// Quadratic form of the associativity relation, as a bilinear map in the
// two potential arguments:
//   sum_j A_X[a][b][j] (d_j d_c d_e Y)  -  sum_j A_X[a][c][j] (d_j d_b d_e Y).
inline Series cwdvv_bilinear(const PotentialPartials& x, const PotentialPartials& y, int a, int b, int c, int e) {
    const int n = x.n();
    Series acc = x.contracted(a, b, 0) * y.third(0, c, e);
    for (int j = 1; j < n; ++j) acc = acc + x.contracted(a, b, j) * y.third(j, c, e);
    for (int j = 0; j < n; ++j) acc = acc - x.contracted(a, c, j) * y.third(j, b, e);
    return acc;
}

// LHS - RHS of the associativity relation on one potential.
inline Series cwdvv_residual(const Series& phi, const RatMatrix& ginv, int a, int b, int c, int e) {
    const int n = phi.ring().num_t;
    detail::require_index(a, n, "cwdvv_residual");
    detail::require_index(b, n, "cwdvv_residual");
    detail::require_index(c, n, "cwdvv_residual");
    detail::require_index(e, n, "cwdvv_residual");
    PotentialPartials p(phi, ginv);
    return cwdvv_bilinear(p, p, a, b, c, e);
}

// The two-real-point relation, split into the part linear in the real
// potential and the part bilinear in two real potentials:
//   residual = S(omega) + B(omega, omega)
//   S(y) = sum_j A[a][b][j] (d_{t_j} d_u y)
//   B(x,y) = (d_a d_b x)(d_u^2 y) - (d_a d_u x)(d_b d_u y).
inline Series m12_linear_part(const PotentialPartials& p, const OmegaPartials& y, int a, int b) {
    const int n = p.n();
    Series acc = p.contracted(a, b, 0) * y.dtu(0);
    for (int j = 1; j < n; ++j) acc = acc + p.contracted(a, b, j) * y.dtu(j);
    return acc;
}

inline Series m12_bilinear(const OmegaPartials& x, const OmegaPartials& y, int a, int b) {
    return x.d2(a, b) * y.duu() - x.dtu(a) * y.dtu(b);
}

inline Series m12_residual(const Series& phi_phi, const Series& omega, const RatMatrix& ginv, int a, int b) {
    const int n = phi_phi.ring().num_t;
    detail::require_index(a, n, "m12_residual");
    detail::require_index(b, n, "m12_residual");
    if (!(phi_phi.ring() == omega.ring()))
        throw StructuralError("m12_residual: potentials live in different rings");
    PotentialPartials p(phi_phi, ginv);
    OmegaPartials o(omega);
    return m12_linear_part(p, o, a, b) + m12_bilinear(o, o, a, b);
}

// The three-conjugate-pair relation, same decomposition:
//   S(y) = sum_j A[a][b][j](d_{t_j} d_{t_c} y) - sum_j A[a][c][j](d_{t_j} d_{t_b} y)
//   B(x,y) = (d_a d_b x)(d_c d_u y) - (d_a d_c x)(d_b d_u y).
inline Series m03_linear_part(const PotentialPartials& p, const OmegaPartials& y, int a, int b, int c) {
    const int n = p.n();
    Series acc = p.contracted(a, b, 0) * y.d2(0, c);
    for (int j = 1; j < n; ++j) acc = acc + p.contracted(a, b, j) * y.d2(j, c);
    for (int j = 0; j < n; ++j) acc = acc - p.contracted(a, c, j) * y.d2(j, b);
    return acc;
}

inline Series m03_bilinear(const OmegaPartials& x, const OmegaPartials& y, int a, int b, int c) {
    return x.d2(a, b) * y.dtu(c) - x.d2(a, c) * y.dtu(b);
}

inline Series m03_residual(const Series& phi_phi, const Series& omega, const RatMatrix& ginv, int a, int b, int c) {
    const int n = phi_phi.ring().num_t;
    detail::require_index(a, n, "m03_residual");
    detail::require_index(b, n, "m03_residual");
    detail::require_index(c, n, "m03_residual");
    if (!(phi_phi.ring() == omega.ring()))
        throw StructuralError("m03_residual: potentials live in different rings");
    PotentialPartials p(phi_phi, ginv);
    OmegaPartials o(omega);
    return m03_linear_part(p, o, a, b, c) + m03_bilinear(o, o, a, b, c);
}

// ---- exact linear solving ---------------------------------------------------

// One coefficient equation: base + sum coeff_w x_w = 0.
struct LinearRow {
    std::string location;
    Rational base;
    std::map<int, Rational> coeff;
};

struct LinearSolveResult {
    std::map<int, Rational> values;
    std::vector<int> undetermined;
    std::map<int, int> multiplicity; // unknown -> number of equations containing it
};

// Ordered Gauss-Jordan elimination over the rationals. Row order is the
// caller's (graded monomial order in practice); each unknown is pivoted
// on the first unused row that mentions it, and every surviving relation
// is checked, so no overdetermined equation is ever ignored.
inline LinearSolveResult solve_linear_system(std::vector<LinearRow> rows, int num_unknowns) {
    LinearSolveResult res;
    for (const auto& r : rows)
        for (const auto& [w, c] : r.coeff)
            if (!c.is_zero()) ++res.multiplicity[w];
    std::vector<int> pivot_row(static_cast<size_t>(num_unknowns), -1);
    std::vector<bool> used(rows.size(), false);
    for (int col = 0; col < num_unknowns; ++col) {
        int piv = -1;
        for (size_t r = 0; r < rows.size(); ++r) {
            if (used[r]) continue;
            auto it = rows[r].coeff.find(col);
            if (it != rows[r].coeff.end() && !it->second.is_zero()) {
                piv = static_cast<int>(r);
                break;
            }
        }
        if (piv < 0) continue;
        used[static_cast<size_t>(piv)] = true;
        pivot_row[static_cast<size_t>(col)] = piv;
        LinearRow& p = rows[static_cast<size_t>(piv)];
        Rational d = p.coeff[col];
        for (auto& [w, c] : p.coeff) c /= d;
        p.base /= d;
        for (size_t r = 0; r < rows.size(); ++r) {
            if (static_cast<int>(r) == piv) continue;
            auto it = rows[r].coeff.find(col);
            if (it == rows[r].coeff.end() || it->second.is_zero()) continue;
            Rational f = it->second;
            for (const auto& [w, c] : p.coeff) {
                Rational& tgt = rows[r].coeff[w];
                tgt -= f * c;
                if (tgt.is_zero()) rows[r].coeff.erase(w);
            }
            rows[r].base -= f * p.base;
        }
    }
    for (size_t r = 0; r < rows.size(); ++r) {
        if (used[r]) continue;
        bool empty = true;
        for (const auto& [w, c] : rows[r].coeff)
            if (!c.is_zero()) { empty = false; break; }
        if (empty && !rows[r].base.is_zero())
            throw SolveError("inconsistent overdetermined equation at " + rows[r].location +
                             " (reduces to " + rows[r].base.str() + " = 0)");
    }
    // A pivot value is determined only when its reduced row involves no
    // free column.
    for (int col = 0; col < num_unknowns; ++col) {
        int piv = pivot_row[static_cast<size_t>(col)];
        if (piv < 0) {
            res.undetermined.push_back(col);
            continue;
        }
        const LinearRow& p = rows[static_cast<size_t>(piv)];
        bool clean = true;
        for (const auto& [w, c] : p.coeff)
            if (w != col && !c.is_zero()) { clean = false; break; }
        if (clean)
            res.values[col] = -p.base;
        else
            res.undetermined.push_back(col);
    }
    return res;
}

// ---- order-by-order solving -------------------------------------------------

struct OrderLog {
    int order = 0;
    int new_unknowns = 0;
    int equations = 0;
    int deferred = 0;
    std::vector<std::string> solved;
};

struct SolveReport {
    bool ok = true;
    std::vector<std::string> solved_keys;
    std::vector<OrderLog> orders;
    std::vector<std::string> underdetermined;
    std::map<std::string, int> equation_multiplicity;
    std::string note;

    std::string render() const {
        std::ostringstream os;
        os << "order-by-order solve report\n";
        for (const auto& o : orders) {
            os << "  order " << o.order << ": +" << o.new_unknowns << " unknowns, " << o.equations
               << " equations";
            if (o.deferred) os << " (" << o.deferred << " deferred as quadratic)";
            os << "\n";
            for (const auto& s : o.solved) os << "    solved " << s << "\n";
        }
        if (!underdetermined.empty()) {
            os << "  underdetermined keys:\n";
            for (const auto& s : underdetermined) os << "    " << s << "\n";
        }
        if (!note.empty()) os << "  note: " << note << "\n";
        os << (ok ? "  status: consistent\n" : "  status: FAILED\n");
        return os.str();
    }
};

struct SolveOptions {
    int dmax = 1;
    bool use_m12 = true;
    bool use_m03 = true;
    int max_extra_orders = 3;
    std::string spin_tag;
};

namespace detail {

// The solvers below assume the plane-like shape: rank-one lattice, one
// unit class, one divisor class, one point-type class, dimension rule
// available. The degree-one seeds encode the unique line through two
// points, which is what that shape pins down.
inline void require_plane_like(const TargetModel& m, const char* what) {
    int units = 0, divisors = 0, kept = 0;
    for (int i = 0; i < m.n_classes(); ++i) {
        units += m.is_unit(i) ? 1 : 0;
        divisors += m.is_divisor(i) ? 1 : 0;
        kept += m.is_kept(i) ? 1 : 0;
    }
    if (m.lattice_rank != 1 || !m.has_dimension_rule() || units != 1 || divisors != 1 || kept != 1)
        throw ConfigError(std::string(what) +
                          ": model must be plane-like (rank-1 lattice, a dimension rule, one unit "
                          "class, one divisor class, one higher class)");
}

// Unknown keys introduced at one Novikov order.
inline std::vector<InvariantKey> complex_unknowns_at(const TargetModel& m, int order) {
    std::vector<InvariantKey> out;
    auto keptIdx = class_indices_where(m, &TargetModel::is_kept);
    std::vector<int> b{order};
    std::vector<int> ins(static_cast<size_t>(m.n_classes()), 0);
    for_each_exponent_vector(keptIdx, 3 * order + 2, ins, 0, [&](const std::vector<int>& iv) {
        if (!m.complex_key_admissible(b, iv)) return;
        out.push_back(InvariantKey{Sector::Complex, b, iv, 0, ""});
    });
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<InvariantKey> real_unknowns_at(const TargetModel& m, int order, const std::string& spin_tag) {
    std::vector<InvariantKey> out;
    auto keptIdx = class_indices_where(m, &TargetModel::is_kept);
    const int n = m.real_dimension / 2;
    std::vector<int> b{order};
    std::vector<int> ins(static_cast<size_t>(m.n_classes()), 0);
    for_each_exponent_vector(keptIdx, 3 * order + 2, ins, 0, [&](const std::vector<int>& iv) {
        long long used = 0;
        for (int i = 0; i < m.n_classes(); ++i) used += static_cast<long long>(m.degree_of(i) - 2) * iv[static_cast<size_t>(i)];
        long long rem = m.c1_pair(b) + n - 3 - used;
        if (rem < 0 || rem % (n - 1) != 0) return;
        out.push_back(InvariantKey{Sector::Real, b, iv, static_cast<int>(rem / (n - 1)), spin_tag});
    });
    std::sort(out.begin(), out.end());
    return out;
}

// Equation under construction: affine-linear part plus any quadratic
// excess in still-unknown pairs (such equations are deferred).
struct PendingEquation {
    std::string location;
    Rational base;
    std::map<InvariantKey, Rational> linear;
    std::map<std::pair<InvariantKey, InvariantKey>, Rational> quad;
};

struct EquationCollector {
    const RingDesc& ring;
    int order;
    std::vector<PendingEquation> linear_rows;
    std::vector<PendingEquation> deferred_rows;

    // base / per-unknown linear / per-pair quadratic coefficient series of
    // one relation instance; emits one equation per order-`order` monomial.
    void collect(const std::string& location_prefix, const Series& base,
                 const std::vector<std::pair<InvariantKey, Series>>& linear,
                 const std::map<std::pair<InvariantKey, InvariantKey>, Series>& quad) {
        std::map<Monomial, PendingEquation, MonomialOrder> eqs{MonomialOrder{ring.weights}};
        auto touch = [&](const Monomial& m) -> PendingEquation* {
            if (m.energy(ring) != order) return nullptr;
            auto it = eqs.find(m);
            if (it == eqs.end()) it = eqs.emplace(m, PendingEquation{}).first;
            return &it->second;
        };
        for (const auto& [m, c] : base.terms())
            if (auto* e = touch(m)) e->base = c;
        for (const auto& [key, s] : linear)
            for (const auto& [m, c] : s.terms())
                if (auto* e = touch(m)) e->linear[key] = c;
        for (const auto& [pair, s] : quad)
            for (const auto& [m, c] : s.terms())
                if (auto* e = touch(m)) e->quad[pair] = c;
        for (auto& [m, e] : eqs) {
            if (e.base.is_zero() && e.linear.empty() && e.quad.empty()) continue;
            e.location = location_prefix + " @ coefficient of " + render_monomial(m);
            if (e.quad.empty())
                linear_rows.push_back(std::move(e));
            else
                deferred_rows.push_back(std::move(e));
        }
    }

    std::string render_monomial(const Monomial& m) const {
        Series probe(ring, Truncation{m.tu_degree(), m.energy(ring)});
        probe.add_term(m, Rational(1));
        return probe.render();
    }
};

} // namespace detail

// Solves the complex invariants of a plane-like model order by order from
// the associativity relations, seeded with the single degree-one curve
// through two points.
inline std::pair<InvariantTable, SolveReport> solve_complex_p2(std::shared_ptr<const TargetModel> model,
                                                               int dmax) {
    const TargetModel& m = *model;
    detail::require_plane_like(m, "solve_complex_p2");
    if (dmax < 1) throw ConfigError("solve_complex_p2: dmax must be >= 1");
    InvariantTable table(model);
    SolveReport report;
    for (const auto& key : detail::complex_unknowns_at(m, 1)) {
        table.set(key, Rational(1), Provenance::Seed);
        report.solved_keys.push_back(key_to_string(key, m) + " (seed)");
    }
    const RatMatrix ginv = m.inverse_pairing();
    const int n = m.n_classes();
    for (int order = 2; order <= dmax; ++order) {
        Truncation tr{3 * order + 2, order};
        auto unknowns = detail::complex_unknowns_at(m, order);
        Series phi0 = assemble_phi(table, tr, /*require_complete=*/false);
        PotentialPartials p0(phi0, ginv);
        std::vector<std::pair<InvariantKey, PotentialPartials>> punits;
        for (const auto& key : unknowns) {
            Series unit(m.ring(), tr);
            emit_complex_entry(m, key, Rational(1), key.degree, 1, unit);
            punits.emplace_back(key, PotentialPartials(unit, ginv));
        }
        detail::EquationCollector collector{m.ring(), order, {}, {}};
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = b + 1; c < n; ++c)
                    for (int e = a + 1; e < n; ++e) {
                        std::ostringstream loc;
                        loc << "CWDVV(a=" << a + 1 << ",b=" << b + 1 << ",c=" << c + 1 << ",d=" << e + 1 << ")";
                        Series base = cwdvv_bilinear(p0, p0, a, b, c, e);
                        std::vector<std::pair<InvariantKey, Series>> lin;
                        for (const auto& [key, pw] : punits)
                            lin.emplace_back(key, cwdvv_bilinear(p0, pw, a, b, c, e) +
                                                      cwdvv_bilinear(pw, p0, a, b, c, e));
                        // unknowns of one order cannot pair quadratically
                        collector.collect(loc.str(), base, lin, {});
                    }
        std::vector<LinearRow> rows;
        std::map<InvariantKey, int> colid;
        for (size_t i = 0; i < unknowns.size(); ++i) colid[unknowns[i]] = static_cast<int>(i);
        for (auto& e : collector.linear_rows) {
            LinearRow r{e.location, e.base, {}};
            for (auto& [k, c] : e.linear) r.coeff[colid.at(k)] = c;
            rows.push_back(std::move(r));
        }
        auto sol = solve_linear_system(std::move(rows), static_cast<int>(unknowns.size()));
        OrderLog log{order, static_cast<int>(unknowns.size()),
                     static_cast<int>(collector.linear_rows.size()),
                     static_cast<int>(collector.deferred_rows.size()), {}};
        for (const auto& [col, v] : sol.values) {
            const InvariantKey& key = unknowns[static_cast<size_t>(col)];
            table.set(key, v, Provenance::Solved);
            std::string named = key_to_string(key, m) + " = " + v.str();
            log.solved.push_back(named);
            report.solved_keys.push_back(named);
            report.equation_multiplicity[key_to_string(key, m)] = sol.multiplicity.count(col) ? sol.multiplicity[col] : 0;
        }
        for (int col : sol.undetermined)
            report.underdetermined.push_back(key_to_string(unknowns[static_cast<size_t>(col)], m));
        report.orders.push_back(std::move(log));
    }
    report.ok = report.underdetermined.empty();
    return {std::move(table), std::move(report)};
}

// Standard seeds of the real plane: the line through two real points and
// the line through a conjugate pair of points.
inline InvariantTable standard_p2_real_seeds(std::shared_ptr<const TargetModel> model,
                                             const std::string& spin_tag = "") {
    const TargetModel& m = *model;
    InvariantTable seeds(model);
    for (const auto& key : detail::real_unknowns_at(m, 1, spin_tag)) seeds.set(key, Rational(1), Provenance::Seed);
    return seeds;
}

// Solves the real invariants order by order from the two families of
// extended relations. Unknowns that no equation of the current order
// determines stay in the pool; the horizon extends a few orders past
// dmax so that late-determined keys (the all-real-point ones) resolve.
inline std::pair<InvariantTable, SolveReport> solve_real_p2(std::shared_ptr<const TargetModel> model,
                                                            const InvariantTable& complex_table,
                                                            const InvariantTable& seeds,
                                                            const SolveOptions& opt) {
    const TargetModel& m = *model;
    detail::require_plane_like(m, "solve_real_p2");
    if (m.real_dimension != 4)
        throw ConfigError("solve_real_p2: the real solver is wired for fourfold targets");
    if (opt.dmax < 1) throw ConfigError("solve_real_p2: dmax must be >= 1");
    if (!opt.use_m12 && !opt.use_m03)
        throw ConfigError("solve_real_p2: at least one relation family must be enabled");

    InvariantTable table(model);
    SolveReport report;
    for (const auto& key : detail::real_unknowns_at(m, 1, opt.spin_tag)) {
        auto v = seeds.get(key);
        if (!v) throw ConfigError("solve_real_p2: seeds lack required entry " + key_to_string(key, m));
        table.set(key, *v, Provenance::Seed);
        report.solved_keys.push_back(key_to_string(key, m) + " = " + v->str() + " (seed)");
    }

    const RatMatrix ginv = m.inverse_pairing();
    const int n = m.n_classes();
    std::vector<InvariantKey> pool;
    std::vector<detail::PendingEquation> deferred;

    auto order_of = [](const InvariantKey& k) { return k.degree[0]; };

    auto check_deferred = [&](bool final_pass) {
        std::vector<detail::PendingEquation> keep;
        for (auto& e : deferred) {
            bool ready = true;
            for (const auto& [k, c] : e.linear)
                if (!table.has(k)) ready = false;
            for (const auto& [p, c] : e.quad)
                if (!table.has(p.first) || !table.has(p.second)) ready = false;
            if (!ready) {
                if (!final_pass) keep.push_back(std::move(e));
                continue;
            }
            Rational v = e.base;
            for (const auto& [k, c] : e.linear) v += c * *table.get(k);
            for (const auto& [p, c] : e.quad) v += c * *table.get(p.first) * *table.get(p.second);
            if (!v.is_zero())
                throw SolveError("inconsistent deferred equation at " + e.location + " (value " + v.str() + ")");
        }
        deferred = std::move(keep);
    };

    int horizon = opt.dmax;
    for (int order = 2; order <= horizon; ++order) {
        Truncation tr{3 * order + 2, order};
        for (auto& key : detail::real_unknowns_at(m, order, opt.spin_tag)) pool.push_back(key);
        std::sort(pool.begin(), pool.end());

        Series phiphi = assemble_phi_phi(complex_table, tr, /*require_complete=*/true);
        PotentialPartials pp(phiphi, ginv);
        Series omega0 = assemble_omega(table, tr, /*require_complete=*/false, opt.spin_tag);
        OmegaPartials o0(omega0);
        std::vector<std::pair<InvariantKey, OmegaPartials>> ounits;
        for (const auto& key : pool) {
            Series unit(m.ring(), tr);
            emit_real_entry(m, key, Rational(1), unit);
            ounits.emplace_back(key, OmegaPartials(unit));
        }
        std::vector<std::pair<size_t, size_t>> qpairs;
        for (size_t i = 0; i < pool.size(); ++i)
            for (size_t j = i; j < pool.size(); ++j)
                if (order_of(pool[i]) + order_of(pool[j]) <= order) qpairs.emplace_back(i, j);

        detail::EquationCollector collector{m.ring(), order, {}, {}};
        auto run_family = [&](bool is_m12, int a, int b, int c) {
            std::ostringstream loc;
            if (is_m12)
                loc << "M12(a=" << a + 1 << ",b=" << b + 1 << ")";
            else
                loc << "M03(a=" << a + 1 << ",b=" << b + 1 << ",c=" << c + 1 << ")";
            Series base = is_m12 ? m12_linear_part(pp, o0, a, b) + m12_bilinear(o0, o0, a, b)
                                 : m03_linear_part(pp, o0, a, b, c) + m03_bilinear(o0, o0, a, b, c);
            std::vector<std::pair<InvariantKey, Series>> lin;
            for (const auto& [key, ow] : ounits) {
                Series s = is_m12 ? m12_linear_part(pp, ow, a, b) + m12_bilinear(o0, ow, a, b) +
                                        m12_bilinear(ow, o0, a, b)
                                  : m03_linear_part(pp, ow, a, b, c) + m03_bilinear(o0, ow, a, b, c) +
                                        m03_bilinear(ow, o0, a, b, c);
                lin.emplace_back(key, std::move(s));
            }
            std::map<std::pair<InvariantKey, InvariantKey>, Series> quad;
            for (const auto& [i, j] : qpairs) {
                const auto& [ki, oi] = ounits[i];
                const auto& [kj, oj] = ounits[j];
                Series s = is_m12 ? m12_bilinear(oi, oj, a, b) : m03_bilinear(oi, oj, a, b, c);
                if (i != j) s = s + (is_m12 ? m12_bilinear(oj, oi, a, b) : m03_bilinear(oj, oi, a, b, c));
                if (!s.is_zero()) quad.emplace(std::make_pair(ki, kj), std::move(s));
            }
            collector.collect(loc.str(), base, lin, quad);
        };
        if (opt.use_m12)
            for (int a = 0; a < n; ++a)
                for (int b = a; b < n; ++b) run_family(true, a, b, -1);
        if (opt.use_m03)
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    for (int c = b + 1; c < n; ++c) run_family(false, a, b, c);

        std::vector<LinearRow> rows;
        std::map<InvariantKey, int> colid;
        for (size_t i = 0; i < pool.size(); ++i) colid[pool[i]] = static_cast<int>(i);
        for (auto& e : collector.linear_rows) {
            LinearRow r{e.location, e.base, {}};
            for (auto& [k, c] : e.linear) r.coeff[colid.at(k)] = c;
            rows.push_back(std::move(r));
        }
        auto sol = solve_linear_system(std::move(rows), static_cast<int>(pool.size()));
        OrderLog log{order, static_cast<int>(detail::real_unknowns_at(m, order, opt.spin_tag).size()),
                     static_cast<int>(collector.linear_rows.size()),
                     static_cast<int>(collector.deferred_rows.size()), {}};
        for (const auto& [col, v] : sol.values) {
            const InvariantKey& key = pool[static_cast<size_t>(col)];
            table.set(key, v, Provenance::Solved);
            std::string named = key_to_string(key, m) + " = " + v.str();
            log.solved.push_back(named);
            report.solved_keys.push_back(named);
            report.equation_multiplicity[key_to_string(key, m)] = sol.multiplicity.count(col) ? sol.multiplicity[col] : 0;
        }
        report.orders.push_back(std::move(log));
        for (auto& e : collector.deferred_rows) deferred.push_back(std::move(e));
        std::vector<InvariantKey> remaining;
        for (const auto& k : pool)
            if (!table.has(k)) remaining.push_back(k);
        pool = std::move(remaining);
        check_deferred(/*final_pass=*/false);
        bool pending_in_range = false;
        for (const auto& k : pool)
            if (order_of(k) <= opt.dmax) pending_in_range = true;
        if (order == horizon && pending_in_range && horizon < opt.dmax + opt.max_extra_orders) ++horizon;
    }
    check_deferred(/*final_pass=*/true);
    for (const auto& k : pool)
        if (order_of(k) <= opt.dmax) report.underdetermined.push_back(key_to_string(k, m));
    report.ok = report.underdetermined.empty();
    if (horizon > opt.dmax)
        report.note = "solve horizon extended to order " + std::to_string(horizon) +
                      " to determine late-coupled keys";

    // Deliverable table: only the requested range.
    InvariantTable out(model);
    for (const auto& [key, e] : table.entries())
        if (order_of(key) <= opt.dmax) out.set(key, e.value, e.provenance);
    return {std::move(out), std::move(report)};
}

// ---- cross-consistency ------------------------------------------------------

struct CrossReport {
    bool ok = true;
    std::string detail;
    std::vector<std::string> mismatches;
    std::vector<std::string> only_first;  // solved by the two-point family only
    std::vector<std::string> only_second; // solved by the three-pair family only
    SolveReport m12_report, m03_report;

    std::string render() const {
        std::ostringstream os;
        os << "cross-consistency report (two-point family vs three-pair family)\n";
        os << "  status: " << (ok ? "consistent" : "FAILED") << "\n";
        if (!detail.empty()) os << "  " << detail << "\n";
        for (const auto& s : mismatches) os << "  mismatch: " << s << "\n";
        if (!only_first.empty()) {
            os << "  determined only by the two-point family:\n";
            for (const auto& s : only_first) os << "    " << s << "\n";
        }
        if (!only_second.empty()) {
            os << "  determined only by the three-pair family:\n";
            for (const auto& s : only_second) os << "    " << s << "\n";
        }
        return os.str();
    }
};

inline CrossReport cross_consistency(std::shared_ptr<const TargetModel> model,
                                     const InvariantTable& complex_table, const InvariantTable& seeds,
                                     int dmax, const std::string& spin_tag = "") {
    CrossReport rep;
    std::optional<InvariantTable> t12, t03;
    try {
        SolveOptions o;
        o.dmax = dmax;
        o.use_m12 = true;
        o.use_m03 = false;
        o.spin_tag = spin_tag;
        auto [t, r] = solve_real_p2(model, complex_table, seeds, o);
        t12 = std::move(t);
        rep.m12_report = std::move(r);
    } catch (const std::exception& e) {
        rep.ok = false;
        rep.detail = std::string("two-point-family solve failed: ") + e.what();
        return rep;
    }
    try {
        SolveOptions o;
        o.dmax = dmax;
        o.use_m12 = false;
        o.use_m03 = true;
        o.spin_tag = spin_tag;
        auto [t, r] = solve_real_p2(model, complex_table, seeds, o);
        t03 = std::move(t);
        rep.m03_report = std::move(r);
    } catch (const std::exception& e) {
        rep.ok = false;
        rep.detail = std::string("three-pair-family solve failed: ") + e.what();
        return rep;
    }
    const TargetModel& m = *model;
    for (const auto& [key, e] : t12->entries()) {
        auto v = t03->get(key);
        if (!v) {
            rep.only_first.push_back(key_to_string(key, m));
            continue;
        }
        if (*v != e.value) {
            rep.ok = false;
            rep.mismatches.push_back(key_to_string(key, m) + ": " + e.value.str() + " vs " + v->str());
        }
    }
    for (const auto& [key, e] : t03->entries())
        if (!t12->has(key)) rep.only_second.push_back(key_to_string(key, m));
    if (!rep.ok && rep.detail.empty() && !rep.mismatches.empty())
        rep.detail = "first differing key: " + rep.mismatches.front();
    return rep;
}

// ---- residual sweeps --------------------------------------------------------

struct ResidualSweep {
    bool all_zero = true;
    int instances = 0;
    std::vector<std::string> failures;
};

// Evaluates every relation instance over all index tuples on the
// assembled potentials and reports any nonzero residual.
inline ResidualSweep sweep_residuals(const TargetModel& m, const InvariantTable& complex_table,
                                     const InvariantTable& real_table, const Truncation& tr,
                                     const std::string& spin_tag = "") {
    ResidualSweep sweep;
    const RatMatrix ginv = m.inverse_pairing();
    const int n = m.n_classes();
    auto note = [&](const std::string& family, std::initializer_list<int> idx, const Series& r) {
        ++sweep.instances;
        if (r.is_zero()) return;
        sweep.all_zero = false;
        std::string s = family + "(";
        bool first = true;
        for (int i : idx) {
            if (!first) s += ",";
            s += std::to_string(i + 1);
            first = false;
        }
        s += ") != 0, e.g. " + r.render().substr(0, 120);
        sweep.failures.push_back(s);
    };

    Series phi = assemble_phi(complex_table, tr, true);
    PotentialPartials p(phi, ginv);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int e = 0; e < n; ++e) note("CWDVV", {a, b, c, e}, cwdvv_bilinear(p, p, a, b, c, e));

    Series phiphi = assemble_phi_phi(complex_table, tr, true);
    Series omega = assemble_omega(real_table, tr, true, spin_tag);
    PotentialPartials pp(phiphi, ginv);
    OmegaPartials o(omega);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            note("M12", {a, b}, m12_linear_part(pp, o, a, b) + m12_bilinear(o, o, a, b));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                note("M03", {a, b, c}, m03_linear_part(pp, o, a, b, c) + m03_bilinear(o, o, a, b, c));
    return sweep;
}

} // namespace rwdvv
