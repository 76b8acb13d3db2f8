#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rwdvv/errors.hpp"
#include "rwdvv/series.hpp"
#include "rwdvv/target.hpp"

namespace rwdvv {

enum class Sector { Complex, Real };
enum class Provenance { Seed, Solved, Imported };

inline const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::Seed: return "seed";
        case Provenance::Solved: return "solved";
        default: return "imported";
    }
}

// Reduced key of one stored invariant. Complex keys carry no real marked
// points and no spin tag; insertion exponents are indexed by the model
// basis and may be nonzero only on classes of degree >= 4 (unit and
// divisor insertions are always reduced away before storage).
struct InvariantKey {
    Sector sector = Sector::Complex;
    std::vector<int> degree;
    std::vector<int> insertions;
    int real_points = 0;
    std::string spin_tag;

    friend bool operator==(const InvariantKey& a, const InvariantKey& b) {
        return a.sector == b.sector && a.degree == b.degree && a.insertions == b.insertions &&
               a.real_points == b.real_points && a.spin_tag == b.spin_tag;
    }
    friend bool operator<(const InvariantKey& a, const InvariantKey& b) {
        if (a.sector != b.sector) return a.sector < b.sector;
        if (a.degree != b.degree) return a.degree < b.degree;
        if (a.real_points != b.real_points) return a.real_points < b.real_points;
        if (a.insertions != b.insertions) return a.insertions < b.insertions;
        return a.spin_tag < b.spin_tag;
    }
};

inline std::string key_to_string(const InvariantKey& k, const TargetModel& m) {
    std::string s = k.sector == Sector::Complex ? "complex" : "real";
    s += " B=[";
    for (size_t i = 0; i < k.degree.size(); ++i) s += (i ? "," : "") + std::to_string(k.degree[i]);
    s += "] <";
    bool first = true;
    for (int i = 0; i < m.n_classes(); ++i) {
        int c = k.insertions[static_cast<size_t>(i)];
        if (c == 0) continue;
        if (!first) s += ",";
        s += m.basis[static_cast<size_t>(i)].label;
        if (c > 1) s += "^" + std::to_string(c);
        first = false;
    }
    s += ">";
    if (k.sector == Sector::Real) {
        s += " k=" + std::to_string(k.real_points);
        if (!k.spin_tag.empty()) s += " spin=" + k.spin_tag;
    }
    return s;
}

struct TableEntry {
    Rational value;
    Provenance provenance = Provenance::Imported;
};

// Map from reduced keys to exact values, bound to one target model.
// Append-only while solving; reads are pure.
class InvariantTable {
public:
    explicit InvariantTable(std::shared_ptr<const TargetModel> model) : model_(std::move(model)) {}

    const TargetModel& model() const { return *model_; }
    std::shared_ptr<const TargetModel> model_ptr() const { return model_; }
    const std::map<InvariantKey, TableEntry>& entries() const { return entries_; }
    size_t size() const { return entries_.size(); }

    bool has(const InvariantKey& k) const { return entries_.count(k) != 0; }
    std::optional<Rational> get(const InvariantKey& k) const {
        auto it = entries_.find(k);
        if (it == entries_.end()) return std::nullopt;
        return it->second.value;
    }

    void set(const InvariantKey& key, const Rational& value, Provenance prov) {
        check_key(key);
        entries_[key] = TableEntry{value, prov};
    }

    // Value of a possibly unreduced complex invariant: unit insertions
    // kill positive-degree invariants, divisor insertions peel off their
    // pairing with the class, and the dimension rule zeroes everything
    // off the selected stratum.
    Rational complex_value(const std::vector<int>& b_class, const std::vector<int>& insertions) const {
        const TargetModel& m = *model_;
        if (is_zero_class(b_class))
            throw StructuralError("complex_value: classical (B=0) terms are seeded, not stored");
        Rational mult(1);
        std::vector<int> reduced(insertions);
        for (int i = 0; i < m.n_classes(); ++i) {
            int c = insertions[static_cast<size_t>(i)];
            if (c == 0) continue;
            if (m.is_unit(i)) return Rational(0);
            if (m.is_divisor(i)) {
                mult *= Rational(m.divisor_pair(i, b_class)).pow(c);
                reduced[static_cast<size_t>(i)] = 0;
            }
        }
        if (mult.is_zero()) return Rational(0);
        if (m.has_dimension_rule() && !m.complex_key_admissible(b_class, reduced)) return Rational(0);
        InvariantKey key{Sector::Complex, b_class, reduced, 0, ""};
        auto it = entries_.find(key);
        if (it == entries_.end()) throw IncompleteTableError(key_to_string(key, m));
        return mult * it->second.value;
    }

    // Real-sector analogue; the divisor multiplier is the pairing with the
    // full curve class, scaled by the model's convention field.
    Rational real_value(const std::vector<int>& b_class, int k, const std::vector<int>& insertions,
                        const std::string& spin_tag) const {
        const TargetModel& m = *model_;
        if (is_zero_class(b_class))
            throw StructuralError("real_value: degree-0 real terms are seeded, not stored");
        Rational mult(1);
        std::vector<int> reduced(insertions);
        for (int i = 0; i < m.n_classes(); ++i) {
            int c = insertions[static_cast<size_t>(i)];
            if (c == 0) continue;
            if (m.is_unit(i)) return Rational(0);
            if (m.is_divisor(i)) {
                mult *= (m.real_divisor_scale * Rational(m.divisor_pair(i, b_class))).pow(c);
                reduced[static_cast<size_t>(i)] = 0;
            }
        }
        if (mult.is_zero()) return Rational(0);
        if (m.has_dimension_rule() && !m.real_key_admissible(b_class, k, reduced)) return Rational(0);
        InvariantKey key{Sector::Real, b_class, reduced, k, spin_tag};
        auto it = entries_.find(key);
        if (it == entries_.end()) throw IncompleteTableError(key_to_string(key, m));
        return mult * it->second.value;
    }

private:
    static bool is_zero_class(const std::vector<int>& b) {
        for (int x : b)
            if (x != 0) return false;
        return true;
    }

    void check_key(const InvariantKey& key) const {
        const TargetModel& m = *model_;
        if (static_cast<int>(key.degree.size()) != m.lattice_rank)
            throw StructuralError("invariant key: degree vector has wrong rank");
        for (int x : key.degree)
            if (x < 0) throw StructuralError("invariant key: negative degree");
        if (is_zero_class(key.degree))
            throw StructuralError("invariant key: degree-0 terms are seeded directly, not stored");
        if (static_cast<int>(key.insertions.size()) != m.n_classes())
            throw StructuralError("invariant key: insertion vector has wrong size");
        for (int i = 0; i < m.n_classes(); ++i) {
            int c = key.insertions[static_cast<size_t>(i)];
            if (c < 0) throw StructuralError("invariant key: negative insertion exponent");
            if (c > 0 && !m.is_kept(i))
                throw StructuralError("invariant key: unit/divisor insertions must be reduced away ('" +
                                      m.basis[static_cast<size_t>(i)].label + "')");
        }
        if (key.sector == Sector::Complex) {
            if (key.real_points != 0 || !key.spin_tag.empty())
                throw StructuralError("invariant key: complex keys carry no real points or spin tag");
            if (m.has_dimension_rule() && !m.complex_key_admissible(key.degree, key.insertions))
                throw StructuralError("invariant key violates the dimension rule: " + key_to_string(key, m));
        } else {
            if (key.real_points < 0) throw StructuralError("invariant key: negative real point count");
            if (m.has_dimension_rule() && !m.real_key_admissible(key.degree, key.real_points, key.insertions))
                throw StructuralError("invariant key violates the dimension rule: " + key_to_string(key, m));
            for (const auto& [k2, e2] : entries_) {
                (void)e2;
                if (k2.sector == Sector::Real && k2.spin_tag != key.spin_tag)
                    throw StructuralError("invariant table: real entries with different spin tags never merge");
            }
        }
    }

    std::shared_ptr<const TargetModel> model_;
    std::map<InvariantKey, TableEntry> entries_;
};

// Removes one divisor insertion from a key; returns the reduced key and
// the multiplier it costs.
inline std::pair<InvariantKey, Rational> divisor_reduce(const TargetModel& m, const InvariantKey& key,
                                                        int basis_index) {
    if (basis_index < 0 || basis_index >= m.n_classes())
        throw StructuralError("divisor_reduce: basis index out of range");
    if (!m.is_divisor(basis_index))
        throw StructuralError("divisor_reduce: insertion '" + m.basis[static_cast<size_t>(basis_index)].label +
                              "' is not a divisor class");
    if (key.insertions[static_cast<size_t>(basis_index)] < 1)
        throw StructuralError("divisor_reduce: key has no such insertion");
    InvariantKey reduced = key;
    --reduced.insertions[static_cast<size_t>(basis_index)];
    Rational mult = Rational(m.divisor_pair(basis_index, key.degree));
    if (key.sector == Sector::Real) mult *= m.real_divisor_scale;
    return {reduced, mult};
}

namespace detail {

// Enumerate non-negative exponent vectors over `indices` with sum <= cap.
inline void for_each_exponent_vector(const std::vector<int>& indices, int cap, std::vector<int>& scratch,
                                     size_t pos, const std::function<void(const std::vector<int>&)>& fn) {
    if (pos == indices.size()) {
        fn(scratch);
        return;
    }
    for (int e = 0; e <= cap; ++e) {
        scratch[static_cast<size_t>(indices[pos])] = e;
        for_each_exponent_vector(indices, cap - e, scratch, pos + 1, fn);
    }
    scratch[static_cast<size_t>(indices[pos])] = 0;
}

// Enumerate nonzero lattice vectors with weighted energy <= cap.
inline void for_each_lattice_class(const TargetModel& m, int cap,
                                   const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> b(static_cast<size_t>(m.lattice_rank), 0);
    std::function<void(int, int)> rec = [&](int coord, int left) {
        if (coord == m.lattice_rank) {
            for (int x : b)
                if (x != 0) {
                    fn(b);
                    return;
                }
            return;
        }
        int w = m.energy_weights[static_cast<size_t>(coord)];
        for (int e = 0; e * w <= left; ++e) {
            b[static_cast<size_t>(coord)] = e;
            rec(coord + 1, left - e * w);
        }
        b[static_cast<size_t>(coord)] = 0;
    };
    rec(0, cap);
}

inline std::vector<int> class_indices_where(const TargetModel& m, bool (TargetModel::*pred)(int) const) {
    std::vector<int> out;
    for (int i = 0; i < m.n_classes(); ++i)
        if ((m.*pred)(i)) out.push_back(i);
    return out;
}

inline Rational insertion_factorials(const TargetModel& m, const std::vector<int>& ins) {
    Rational f(1);
    for (int i = 0; i < m.n_classes(); ++i) f *= Rational(factorial(ins[static_cast<size_t>(i)]));
    return f;
}

} // namespace detail

// All monomial contributions of one stored complex invariant, i.e. the
// key itself dressed with every divisor-power expansion that fits the
// truncation. `novikov_image` and `sign` let the caller re-route the
// Novikov exponent (used by the mixed-sector potential).
inline void emit_complex_entry(const TargetModel& m, const InvariantKey& key, const Rational& value,
                               const std::vector<int>& novikov_image, int sign, Series& out) {
    if (value.is_zero()) return;
    const Truncation& tr = out.truncation();
    int base_deg = 0;
    for (int c : key.insertions) base_deg += c;
    if (base_deg > tr.max_tu_degree) return;
    Monomial base = make_monomial(m.ring());
    base.t_exp = key.insertions;
    base.novikov = novikov_image;
    if (base.energy(m.ring()) > tr.max_energy) return;
    Rational base_coeff = Rational(sign) * value / detail::insertion_factorials(m, key.insertions);
    auto divisors = detail::class_indices_where(m, &TargetModel::is_divisor);
    std::vector<int> beta(static_cast<size_t>(m.n_classes()), 0);
    detail::for_each_exponent_vector(divisors, tr.max_tu_degree - base_deg, beta, 0,
                                     [&](const std::vector<int>& bv) {
                                         Rational c = base_coeff;
                                         Monomial mon = base;
                                         for (int i : divisors) {
                                             int e = bv[static_cast<size_t>(i)];
                                             if (e == 0) continue;
                                             c *= Rational(m.divisor_pair(i, key.degree)).pow(e) /
                                                  Rational(factorial(e));
                                             mon.t_exp[static_cast<size_t>(i)] += e;
                                         }
                                         out.add_term(mon, c);
                                     });
}

// Real counterpart; the weight 2^{1-l} q^B u^k / (k! l!) appears here with
// l the total number of conjugate-pair insertions after dressing.
inline void emit_real_entry(const TargetModel& m, const InvariantKey& key, const Rational& value, Series& out) {
    if (value.is_zero()) return;
    const Truncation& tr = out.truncation();
    int base_l = 0;
    for (int c : key.insertions) base_l += c;
    int base_deg = base_l + key.real_points;
    if (base_deg > tr.max_tu_degree) return;
    Monomial base = make_monomial(m.ring());
    base.t_exp = key.insertions;
    base.u_exp = key.real_points;
    base.novikov = key.degree;
    if (base.energy(m.ring()) > tr.max_energy) return;
    Rational base_coeff = value / (Rational(factorial(key.real_points)) * detail::insertion_factorials(m, key.insertions));
    auto divisors = detail::class_indices_where(m, &TargetModel::is_divisor);
    std::vector<int> beta(static_cast<size_t>(m.n_classes()), 0);
    detail::for_each_exponent_vector(
        divisors, tr.max_tu_degree - base_deg, beta, 0, [&](const std::vector<int>& bv) {
            Rational c = base_coeff;
            int l = base_l;
            Monomial mon = base;
            for (int i : divisors) {
                int e = bv[static_cast<size_t>(i)];
                if (e == 0) continue;
                c *= (m.real_divisor_scale * Rational(m.divisor_pair(i, key.degree))).pow(e) /
                     Rational(factorial(e));
                mon.t_exp[static_cast<size_t>(i)] += e;
                l += e;
            }
            out.add_term(mon, c * pow2(1 - l));
        });
}

namespace detail {

inline void add_classical_cubic(const TargetModel& m, Series& out) {
    if (m.triple.empty())
        throw StructuralError("assemble: model lacks tripleProducts for the classical terms");
    if (out.truncation().max_tu_degree < 3) return;
    const int n = m.n_classes();
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b)
            for (int c = b; c < n; ++c) {
                Rational v = m.triple_product(a, b, c);
                if (v.is_zero()) continue;
                Monomial mon = make_monomial(m.ring());
                ++mon.t_exp[static_cast<size_t>(a)];
                ++mon.t_exp[static_cast<size_t>(b)];
                ++mon.t_exp[static_cast<size_t>(c)];
                out.add_term(mon, v / insertion_factorials(m, mon.t_exp));
            }
}

inline void check_complex_complete(const InvariantTable& table, const Truncation& tr, bool dmap_image) {
    const TargetModel& m = table.model();
    auto kept = class_indices_where(m, &TargetModel::is_kept);
    for_each_lattice_class(m, tr.max_energy, [&](const std::vector<int>& b) {
        std::vector<int> image = dmap_image ? m.dmap_apply(b) : b;
        if (dmap_image) {
            int e = m.energy(image);
            if (e > tr.max_energy) return;
        }
        std::vector<int> ins(static_cast<size_t>(m.n_classes()), 0);
        for_each_exponent_vector(kept, tr.max_tu_degree, ins, 0, [&](const std::vector<int>& iv) {
            if (m.has_dimension_rule() && !m.complex_key_admissible(b, iv)) return;
            InvariantKey key{Sector::Complex, b, iv, 0, ""};
            if (!table.has(key)) throw IncompleteTableError(key_to_string(key, m));
        });
    });
}

inline void check_real_complete(const InvariantTable& table, const Truncation& tr, const std::string& spin_tag) {
    const TargetModel& m = table.model();
    auto kept = class_indices_where(m, &TargetModel::is_kept);
    for_each_lattice_class(m, tr.max_energy, [&](const std::vector<int>& b) {
        std::vector<int> ins(static_cast<size_t>(m.n_classes()), 0);
        for_each_exponent_vector(kept, tr.max_tu_degree, ins, 0, [&](const std::vector<int>& iv) {
            int used = 0;
            for (int c : iv) used += c;
            for (int k = 0; k + used <= tr.max_tu_degree; ++k) {
                if (m.has_dimension_rule() && !m.real_key_admissible(b, k, iv)) continue;
                InvariantKey key{Sector::Real, b, iv, k, spin_tag};
                if (!table.has(key)) throw IncompleteTableError(key_to_string(key, m));
            }
        });
    });
}

} // namespace detail

// Generating series of the complex invariants: classical cubic plus one
// dressed family per stored entry, coefficient <...>_B / prod c_i!.
inline Series assemble_phi(const InvariantTable& table, const Truncation& tr, bool require_complete = true) {
    const TargetModel& m = table.model();
    if (require_complete) detail::check_complex_complete(table, tr, false);
    Series out(m.ring(), tr);
    detail::add_classical_cubic(m, out);
    for (const auto& [key, entry] : table.entries()) {
        if (key.sector != Sector::Complex) continue;
        emit_complex_entry(m, key, entry.value, key.degree, 1, out);
    }
    return out;
}

// Mixed-sector complex series: complex classes land on their d-image in
// the Novikov lattice, with the model's sign twist.
inline Series assemble_phi_phi(const InvariantTable& table, const Truncation& tr, bool require_complete = true) {
    const TargetModel& m = table.model();
    if (require_complete) detail::check_complex_complete(table, tr, true);
    Series out(m.ring(), tr);
    detail::add_classical_cubic(m, out);
    for (const auto& [key, entry] : table.entries()) {
        if (key.sector != Sector::Complex) continue;
        emit_complex_entry(m, key, entry.value, m.dmap_apply(key.degree), m.twist_sign(key.degree), out);
    }
    return out;
}

// Real generating series. Besides the stored entries it carries one
// exceptional term u * t_e per unit class e: the constant-map pairing of
// a real point with a conjugate pair of fundamental classes. That term
// makes every unit-direction PDE instance hold identically.
inline Series assemble_omega(const InvariantTable& table, const Truncation& tr, bool require_complete = true,
                             const std::string& spin_tag = "") {
    const TargetModel& m = table.model();
    if (require_complete) detail::check_real_complete(table, tr, spin_tag);
    Series out(m.ring(), tr);
    for (int e = 0; e < m.n_classes(); ++e) {
        if (!m.is_unit(e)) continue;
        Monomial mon = make_monomial(m.ring());
        mon.t_exp[static_cast<size_t>(e)] = 1;
        mon.u_exp = 1;
        out.add_term(mon, Rational(1));
    }
    for (const auto& [key, entry] : table.entries()) {
        if (key.sector != Sector::Real) continue;
        emit_real_entry(m, key, entry.value, out);
    }
    return out;
}

// Inverse of assembly: read one invariant back off a series by dividing
// out the combinatorial weight of its key.
inline Rational extract_invariant(const Series& s, const InvariantKey& key, const TargetModel& m) {
    Monomial mon = make_monomial(m.ring());
    mon.t_exp = key.insertions;
    mon.novikov = key.degree;
    Rational weight = Rational(1) / detail::insertion_factorials(m, key.insertions);
    if (key.sector == Sector::Real) {
        mon.u_exp = key.real_points;
        int l = 0;
        for (int c : key.insertions) l += c;
        weight *= pow2(1 - l) / Rational(factorial(key.real_points));
    }
    return s.coeff(mon) / weight;
}

// ---- JSON serialization ---------------------------------------------------

inline Json table_to_json(const InvariantTable& table) {
    const TargetModel& m = table.model();
    Json j;
    j["target"] = m.name;
    Json entries = Json::array();
    for (const auto& [key, e] : table.entries()) {
        Json rec;
        rec["sector"] = key.sector == Sector::Complex ? "complex" : "real";
        rec["degree"] = key.degree;
        Json ins = Json::object();
        for (int i = 0; i < m.n_classes(); ++i)
            if (key.insertions[static_cast<size_t>(i)] > 0)
                ins[m.basis[static_cast<size_t>(i)].label] = key.insertions[static_cast<size_t>(i)];
        rec["insertions"] = ins;
        if (key.sector == Sector::Real) {
            rec["k"] = key.real_points;
            rec["spinTag"] = key.spin_tag;
        }
        rec["value"] = e.value.str();
        rec["provenance"] = provenance_name(e.provenance);
        entries.push_back(rec);
    }
    j["entries"] = entries;
    return j;
}

inline InvariantTable table_from_json(const Json& j, std::shared_ptr<const TargetModel> model) {
    InvariantTable table(std::move(model));
    const TargetModel& m = table.model();
    try {
        for (const auto& rec : j.at("entries")) {
            InvariantKey key;
            key.sector = rec.at("sector").get<std::string>() == "real" ? Sector::Real : Sector::Complex;
            key.degree = rec.at("degree").get<std::vector<int>>();
            key.insertions.assign(static_cast<size_t>(m.n_classes()), 0);
            for (const auto& [label, count] : rec.at("insertions").items())
                key.insertions[static_cast<size_t>(m.class_index(label))] = count.get<int>();
            if (key.sector == Sector::Real) {
                key.real_points = rec.at("k").get<int>();
                key.spin_tag = rec.at("spinTag").get<std::string>();
            }
            Provenance prov = Provenance::Imported;
            if (rec.contains("provenance")) {
                std::string p = rec.at("provenance").get<std::string>();
                prov = p == "seed" ? Provenance::Seed : (p == "solved" ? Provenance::Solved : Provenance::Imported);
            }
            table.set(key, Rational::parse(rec.at("value").get<std::string>()), prov);
        }
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("invariant table JSON malformed: ") + e.what());
    }
    return table;
}

} // namespace rwdvv
