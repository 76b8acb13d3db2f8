#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rwdvv/errors.hpp"
#include "rwdvv/linalg.hpp"
#include "rwdvv/series.hpp"

namespace rwdvv {

struct BasisClass {
    std::string label;
    int degree = 0; // cohomological degree, even
};

// Kuenneth terms of the Poincare dual of the diagonal in the even part:
// sum of coeff * (mu_i x mu_j) over the listed (i, j).
struct DiagonalSplitting {
    struct Term {
        int i = 0, j = 0;
        Rational coeff;
    };
    std::vector<Term> terms;
};

// Even cohomology of the target space with its intersection pairing,
// involution action, degree lattice and the bookkeeping conventions the
// potentials need. Immutable after validation.
struct TargetModel {
    std::string name;
    int real_dimension = 0; // 2n
    std::vector<BasisClass> basis;
    RatMatrix pairing; // g_{ij} = integral of mu_i mu_j
    std::vector<int> involution_signs;
    int lattice_rank = 1;
    std::vector<std::vector<int>> dmap;              // B |-> B - phi_*(B) on the lattice
    std::map<int, std::vector<int>> divisor_pairing; // degree-2 class index -> pairing with generators
    std::vector<int> c1_pairing;                     // <c1(X), generator>; empty disables dimension rules
    std::vector<int> energy_weights;                 // positive, one per generator
    std::vector<int> phi_phi_twist;                  // complex terms of the mixed potential pick up (-1)^{<twist, B'>}
    Rational real_divisor_scale = Rational(1);       // scale on the real-sector divisor multiplier
    std::vector<Rational> triple;                    // flattened N^3 cup-product integrals
    bool graded_involution_signs = false;            // enforce sigma_i = (-1)^{deg_i/2}

    int n_classes() const { return static_cast<int>(basis.size()); }
    int degree_of(int i) const { return basis[static_cast<size_t>(i)].degree; }
    bool is_unit(int i) const { return degree_of(i) == 0; }
    bool is_divisor(int i) const { return degree_of(i) == 2; }
    bool is_kept(int i) const { return degree_of(i) >= 4; }

    int class_index(const std::string& label) const {
        for (int i = 0; i < n_classes(); ++i)
            if (basis[static_cast<size_t>(i)].label == label) return i;
        throw StructuralError("TargetModel: unknown basis label '" + label + "'");
    }

    RingDesc ring() const { return RingDesc{n_classes(), lattice_rank, energy_weights}; }

    Rational triple_product(int a, int b, int c) const {
        const int n = n_classes();
        return triple[(static_cast<size_t>(a) * n + b) * n + c];
    }
    void set_triple_product(int a, int b, int c, const Rational& v) {
        const int n = n_classes();
        if (triple.empty()) triple.assign(static_cast<size_t>(n) * n * n, Rational(0));
        int idx[3] = {a, b, c};
        std::sort(idx, idx + 3);
        do {
            triple[(static_cast<size_t>(idx[0]) * n + idx[1]) * n + idx[2]] = v;
        } while (std::next_permutation(idx, idx + 3));
    }

    long long divisor_pair(int i, const std::vector<int>& b_class) const {
        auto it = divisor_pairing.find(i);
        if (it == divisor_pairing.end())
            throw StructuralError("TargetModel: class '" + basis[static_cast<size_t>(i)].label +
                                  "' has no divisor pairing");
        long long s = 0;
        for (int r = 0; r < lattice_rank; ++r) s += static_cast<long long>(it->second[static_cast<size_t>(r)]) * b_class[static_cast<size_t>(r)];
        return s;
    }

    std::vector<int> dmap_apply(const std::vector<int>& b_class) const {
        std::vector<int> out(static_cast<size_t>(lattice_rank), 0);
        for (int r = 0; r < lattice_rank; ++r)
            for (int c = 0; c < lattice_rank; ++c)
                out[static_cast<size_t>(r)] += dmap[static_cast<size_t>(r)][static_cast<size_t>(c)] * b_class[static_cast<size_t>(c)];
        return out;
    }

    int energy(const std::vector<int>& b_class) const {
        int e = 0;
        for (int r = 0; r < lattice_rank; ++r) e += energy_weights[static_cast<size_t>(r)] * b_class[static_cast<size_t>(r)];
        return e;
    }

    int c1_pair(const std::vector<int>& b_class) const {
        int e = 0;
        for (int r = 0; r < lattice_rank; ++r) e += c1_pairing[static_cast<size_t>(r)] * b_class[static_cast<size_t>(r)];
        return e;
    }

    int twist_sign(const std::vector<int>& b_class) const {
        if (phi_phi_twist.empty()) return 1;
        long long s = 0;
        for (int r = 0; r < lattice_rank; ++r) s += static_cast<long long>(phi_phi_twist[static_cast<size_t>(r)]) * b_class[static_cast<size_t>(r)];
        return (s % 2 == 0) ? 1 : -1;
    }

    bool has_dimension_rule() const { return !c1_pairing.empty(); }

    // Dimension selection for a reduced complex key: the kept insertions
    // must absorb the virtual dimension, sum (deg_i/2 - 1) c_i = n-3+<c1,B>.
    bool complex_key_admissible(const std::vector<int>& b_class, const std::vector<int>& insertions) const {
        if (!has_dimension_rule()) return true;
        const int n = real_dimension / 2;
        long long lhs = 0;
        for (int i = 0; i < n_classes(); ++i) lhs += static_cast<long long>(degree_of(i) / 2 - 1) * insertions[static_cast<size_t>(i)];
        return lhs == n - 3 + c1_pair(b_class);
    }

    // Real-sector analogue: (n-1) k + sum (deg_i - 2) c_i = <c1,B> + n - 3.
    bool real_key_admissible(const std::vector<int>& b_class, int k, const std::vector<int>& insertions) const {
        if (!has_dimension_rule()) return true;
        const int n = real_dimension / 2;
        long long lhs = static_cast<long long>(n - 1) * k;
        for (int i = 0; i < n_classes(); ++i) lhs += static_cast<long long>(degree_of(i) - 2) * insertions[static_cast<size_t>(i)];
        return lhs == c1_pair(b_class) + n - 3;
    }

    RatMatrix inverse_pairing() const { return pairing.inverse(); }

    DiagonalSplitting diagonal_split() const {
        RatMatrix inv = inverse_pairing();
        DiagonalSplitting d;
        for (int i = 0; i < n_classes(); ++i)
            for (int j = 0; j < n_classes(); ++j)
                if (!inv(i, j).is_zero()) d.terms.push_back({i, j, inv(i, j)});
        return d;
    }

    // Checks every structural invariant; returns all violations found.
    std::vector<std::string> validate() const {
        std::vector<std::string> v;
        const int n = n_classes();
        if (real_dimension <= 0 || real_dimension % 2 != 0)
            v.push_back("realDimension must be a positive even integer");
        if (n == 0) v.push_back("basis must be non-empty");
        for (int i = 0; i < n; ++i) {
            int d = degree_of(i);
            if (d < 0 || d % 2 != 0 || d > real_dimension)
                v.push_back("basis class '" + basis[static_cast<size_t>(i)].label + "' has invalid degree");
        }
        if (pairing.rows() != n || pairing.cols() != n) {
            v.push_back("pairing must be NxN");
            return v; // shape is broken, further checks would misindex
        }
        if (!pairing.is_symmetric()) v.push_back("pairing must be symmetric");
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (!pairing(i, j).is_zero() && degree_of(i) + degree_of(j) != real_dimension)
                    v.push_back("pairing(" + std::to_string(i) + "," + std::to_string(j) +
                                ") nonzero outside top degree");
        try {
            (void)pairing.inverse();
        } catch (const StructuralError&) {
            v.push_back("pairing is singular");
        }
        if (static_cast<int>(involution_signs.size()) != n)
            v.push_back("involutionSigns must have one entry per basis class");
        for (size_t i = 0; i < involution_signs.size(); ++i)
            if (involution_signs[i] != 1 && involution_signs[i] != -1)
                v.push_back("involutionSigns entries must be +1 or -1");
        if (graded_involution_signs && static_cast<int>(involution_signs.size()) == n)
            for (int i = 0; i < n; ++i) {
                int expect = (degree_of(i) / 2) % 2 == 0 ? 1 : -1;
                if (involution_signs[static_cast<size_t>(i)] != expect)
                    v.push_back("involution sign of '" + basis[static_cast<size_t>(i)].label +
                                "' violates the graded sign rule");
            }
        if (lattice_rank < 1) v.push_back("latticeRank must be at least 1");
        if (static_cast<int>(dmap.size()) != lattice_rank)
            v.push_back("dmapMatrix must be r x r");
        else
            for (const auto& row : dmap)
                if (static_cast<int>(row.size()) != lattice_rank) v.push_back("dmapMatrix must be r x r");
        for (int i = 0; i < n; ++i) {
            if (is_divisor(i)) {
                auto it = divisor_pairing.find(i);
                if (it == divisor_pairing.end())
                    v.push_back("degree-2 class '" + basis[static_cast<size_t>(i)].label + "' lacks divisorPairing");
                else if (static_cast<int>(it->second.size()) != lattice_rank)
                    v.push_back("divisorPairing of '" + basis[static_cast<size_t>(i)].label + "' has wrong length");
            }
        }
        if (!c1_pairing.empty() && static_cast<int>(c1_pairing.size()) != lattice_rank)
            v.push_back("c1Pairing must have one entry per lattice generator");
        if (static_cast<int>(energy_weights.size()) != lattice_rank)
            v.push_back("energyWeights must have one entry per lattice generator");
        for (int w : energy_weights)
            if (w <= 0) v.push_back("energyWeights entries must be positive");
        if (!phi_phi_twist.empty() && static_cast<int>(phi_phi_twist.size()) != lattice_rank)
            v.push_back("phiPhiTwist must have one entry per lattice generator");
        if (!triple.empty()) {
            if (static_cast<int>(triple.size()) != n * n * n)
                v.push_back("tripleProducts must cover the full basis");
            else {
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b)
                        for (int c = 0; c < n; ++c)
                            if (triple_product(a, b, c) != triple_product(b, a, c) ||
                                triple_product(a, b, c) != triple_product(a, c, b)) {
                                v.push_back("tripleProducts must be symmetric");
                                a = b = c = n; // stop after first report
                            }
                for (int e = 0; e < n && static_cast<int>(triple.size()) == n * n * n; ++e) {
                    if (!is_unit(e)) continue;
                    for (int a = 0; a < n; ++a)
                        for (int b = 0; b < n; ++b)
                            if (triple_product(e, a, b) != pairing(a, b))
                                v.push_back("tripleProducts disagree with the pairing against the unit");
                }
            }
        }
        return v;
    }
};

// Built-in projective space model with the standard conjugation: basis
// 1, h, .., h^n, anti-diagonal pairing, lattice Z with d(B) = 2B.
inline TargetModel projective_space_model(int n) {
    TargetModel m;
    m.name = "p" + std::to_string(n);
    m.real_dimension = 2 * n;
    for (int i = 0; i <= n; ++i) {
        std::string label = i == 0 ? "1" : (i == 1 ? "h" : "h" + std::to_string(i));
        m.basis.push_back({label, 2 * i});
    }
    const int nc = n + 1;
    m.pairing = RatMatrix(nc, nc);
    for (int i = 0; i < nc; ++i) m.pairing(i, nc - 1 - i) = 1;
    for (int i = 0; i < nc; ++i) m.involution_signs.push_back(i % 2 == 0 ? 1 : -1);
    m.lattice_rank = 1;
    m.dmap = {{2}};
    m.divisor_pairing[1] = {1};
    m.c1_pairing = {n + 1};
    m.energy_weights = {1};
    // The mixed-potential twist pairs the curve class against the second
    // Stiefel-Whitney data of the orienting structure on the real locus:
    // nontrivial for RP^2, trivial for the spin RP^3.
    m.phi_phi_twist = (n % 2 == 0) ? std::vector<int>{1} : std::vector<int>{0};
    m.graded_involution_signs = true;
    for (int a = 0; a < nc; ++a)
        for (int b = 0; b < nc; ++b)
            for (int c = 0; c < nc; ++c)
                m.set_triple_product(a, b, c, a + b + c == n ? Rational(1) : Rational(0));
    return m;
}

inline TargetModel p2_model() { return projective_space_model(2); }
inline TargetModel p3_model() { return projective_space_model(3); }

// ---- JSON serialization ---------------------------------------------------

using Json = nlohmann::ordered_json;

inline Json model_to_json(const TargetModel& m) {
    Json j;
    j["name"] = m.name;
    j["realDimension"] = m.real_dimension;
    Json basis = Json::array();
    for (const auto& b : m.basis) basis.push_back(Json{{"label", b.label}, {"degree", b.degree}});
    j["basis"] = basis;
    Json pairing = Json::array();
    for (int i = 0; i < m.pairing.rows(); ++i) {
        Json row = Json::array();
        for (int k = 0; k < m.pairing.cols(); ++k) row.push_back(m.pairing(i, k).str());
        pairing.push_back(row);
    }
    j["pairing"] = pairing;
    j["involutionSigns"] = m.involution_signs;
    j["latticeRank"] = m.lattice_rank;
    j["dmapMatrix"] = m.dmap;
    Json dp = Json::object();
    for (const auto& [i, vec] : m.divisor_pairing) dp[m.basis[static_cast<size_t>(i)].label] = vec;
    j["divisorPairing"] = dp;
    if (!m.c1_pairing.empty()) j["c1Pairing"] = m.c1_pairing;
    j["energyWeights"] = m.energy_weights;
    if (!m.phi_phi_twist.empty()) j["phiPhiTwist"] = m.phi_phi_twist;
    j["realDivisorScale"] = m.real_divisor_scale.str();
    if (!m.triple.empty()) {
        Json tp = Json::array();
        const int n = m.n_classes();
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b)
                for (int c = b; c < n; ++c) {
                    Rational v = m.triple_product(a, b, c);
                    if (v.is_zero()) continue;
                    tp.push_back(Json{{"classes", Json::array({m.basis[static_cast<size_t>(a)].label,
                                                               m.basis[static_cast<size_t>(b)].label,
                                                               m.basis[static_cast<size_t>(c)].label})},
                                      {"value", v.str()}});
                }
        j["tripleProducts"] = tp;
    }
    j["gradedInvolutionSigns"] = m.graded_involution_signs;
    return j;
}

inline TargetModel model_from_json(const Json& j) {
    TargetModel m;
    try {
        m.name = j.at("name").get<std::string>();
        m.real_dimension = j.at("realDimension").get<int>();
        for (const auto& b : j.at("basis"))
            m.basis.push_back({b.at("label").get<std::string>(), b.at("degree").get<int>()});
        const auto& pairing = j.at("pairing");
        const int n = static_cast<int>(m.basis.size());
        m.pairing = RatMatrix(n, n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                m.pairing(i, k) = Rational::parse(pairing.at(static_cast<size_t>(i)).at(static_cast<size_t>(k)).get<std::string>());
        m.involution_signs = j.at("involutionSigns").get<std::vector<int>>();
        m.lattice_rank = j.at("latticeRank").get<int>();
        m.dmap = j.at("dmapMatrix").get<std::vector<std::vector<int>>>();
        for (const auto& [label, vec] : j.at("divisorPairing").items())
            m.divisor_pairing[m.class_index(label)] = vec.get<std::vector<int>>();
        if (j.contains("c1Pairing")) m.c1_pairing = j.at("c1Pairing").get<std::vector<int>>();
        m.energy_weights = j.contains("energyWeights")
                               ? j.at("energyWeights").get<std::vector<int>>()
                               : std::vector<int>(static_cast<size_t>(m.lattice_rank), 1);
        if (j.contains("phiPhiTwist")) m.phi_phi_twist = j.at("phiPhiTwist").get<std::vector<int>>();
        if (j.contains("realDivisorScale"))
            m.real_divisor_scale = Rational::parse(j.at("realDivisorScale").get<std::string>());
        if (j.contains("tripleProducts"))
            for (const auto& tp : j.at("tripleProducts")) {
                const auto& cls = tp.at("classes");
                m.set_triple_product(m.class_index(cls.at(0).get<std::string>()),
                                     m.class_index(cls.at(1).get<std::string>()),
                                     m.class_index(cls.at(2).get<std::string>()),
                                     Rational::parse(tp.at("value").get<std::string>()));
            }
        if (j.contains("gradedInvolutionSigns")) m.graded_involution_signs = j.at("gradedInvolutionSigns").get<bool>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("model JSON malformed: ") + e.what());
    }
    return m;
}

} // namespace rwdvv
