#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "stlr/error.hpp"

namespace stlr {

// ---------------------------------------------------------------------------
// Finite quantales. Everything is table-driven so each law is decidable by
// enumeration; the reals appear only through the difference-space modules.
// ---------------------------------------------------------------------------

struct Quantale {
    std::vector<std::string> names;
    std::vector<std::vector<bool>> leq;  // leq[i][j] means i <= j
    std::vector<std::vector<int>> mult;
    int unit = 0;

    int size() const { return (int)names.size(); }

    /// Least upper bound of the subset when one exists.
    std::optional<int> sup_of(const std::vector<int>& subset) const {
        std::vector<int> uppers;
        for (int u = 0; u < size(); u++) {
            bool ok = true;
            for (int s : subset)
                if (!leq[s][u]) {
                    ok = false;
                    break;
                }
            if (ok) uppers.push_back(u);
        }
        for (int u : uppers) {
            bool least = true;
            for (int v : uppers)
                if (!leq[u][v]) {
                    least = false;
                    break;
                }
            if (least) return u;
        }
        return std::nullopt;
    }
};

/// Truncated addition on 0..n-1: the finite cousin of the extended
/// nonnegative reals.
inline Quantale chain_quantale(int n) {
    if (n < 1) fail(ErrorKind::Config, "chain quantale needs at least one element");
    Quantale q;
    for (int i = 0; i < n; i++) q.names.push_back(std::to_string(i));
    q.leq.assign(n, std::vector<bool>(n, false));
    q.mult.assign(n, std::vector<int>(n, 0));
    for (int i = 0; i < n; i++)
        for (int j = 0; j < n; j++) {
            q.leq[i][j] = i <= j;
            q.mult[i][j] = std::min(i + j, n - 1);
        }
    q.unit = 0;
    return q;
}

/// Wraparound addition mod n under the linear order: a commutative monoid on
/// a complete lattice whose multiplication does not distribute over joins.
inline Quantale wrap_quantale(int n) {
    if (n < 2) fail(ErrorKind::Config, "wraparound quantale needs at least two elements");
    Quantale q = chain_quantale(n);
    for (int i = 0; i < n; i++)
        for (int j = 0; j < n; j++) q.mult[i][j] = (i + j) % n;
    return q;
}

// ---------------------------------------------------------------------------
// Law reports.
// ---------------------------------------------------------------------------

struct LawResult {
    std::string law;
    bool pass = true;
    std::string witness;
};

struct LawReport {
    std::vector<LawResult> laws;

    bool all_pass() const {
        for (auto& l : laws)
            if (!l.pass) return false;
        return true;
    }
    void record(std::string law, bool pass, std::string witness = "") {
        laws.push_back({std::move(law), pass, std::move(witness)});
    }
    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (auto& l : laws) {
            nlohmann::ordered_json j;
            j["law"] = l.law;
            j["pass"] = l.pass;
            if (!l.witness.empty()) j["witness"] = l.witness;
            arr.push_back(std::move(j));
        }
        return arr;
    }
};

const long long kGmdSizeGuard = 1000000;

inline LawReport check_quantale(const Quantale& q) {
    int n = q.size();
    if (n >= 60 || (long long)n * (1LL << n) > kGmdSizeGuard)
        fail(ErrorKind::SizeGuard, "quantale too large for exhaustive subset checks");
    LawReport rep;

    {
        bool pass = true;
        std::string w;
        for (int i = 0; i < n && pass; i++)
            if (!q.leq[i][i]) {
                pass = false;
                w = q.names[i] + " not <= itself";
            }
        for (int i = 0; i < n && pass; i++)
            for (int j = 0; j < n && pass; j++)
                if (i != j && q.leq[i][j] && q.leq[j][i]) {
                    pass = false;
                    w = q.names[i] + " and " + q.names[j] + " mutually <=";
                }
        for (int i = 0; i < n && pass; i++)
            for (int j = 0; j < n && pass; j++)
                for (int k = 0; k < n && pass; k++)
                    if (q.leq[i][j] && q.leq[j][k] && !q.leq[i][k]) {
                        pass = false;
                        w = "transitivity fails through " + q.names[j];
                    }
        rep.record("partial-order", pass, w);
    }
    {
        bool pass = true;
        std::string w;
        for (std::uint64_t mask = 0; mask < (1ULL << n) && pass; mask++) {
            std::vector<int> subset;
            for (int i = 0; i < n; i++)
                if (mask & (1ULL << i)) subset.push_back(i);
            if (!q.sup_of(subset)) {
                pass = false;
                w = "subset of size " + std::to_string(subset.size()) + " has no least upper bound";
            }
        }
        rep.record("complete-lattice", pass, w);
    }
    {
        bool pass = true;
        std::string w;
        for (int i = 0; i < n && pass; i++)
            for (int j = 0; j < n && pass; j++)
                if (q.mult[i][j] != q.mult[j][i]) {
                    pass = false;
                    w = q.names[i] + " * " + q.names[j] + " is not commutative";
                }
        for (int i = 0; i < n && pass; i++)
            if (q.mult[i][q.unit] != i) {
                pass = false;
                w = q.names[i] + " * unit differs from " + q.names[i];
            }
        for (int i = 0; i < n && pass; i++)
            for (int j = 0; j < n && pass; j++)
                for (int k = 0; k < n && pass; k++)
                    if (q.mult[q.mult[i][j]][k] != q.mult[i][q.mult[j][k]]) {
                        pass = false;
                        w = "associativity fails at (" + q.names[i] + ", " + q.names[j] + ", " +
                            q.names[k] + ")";
                    }
        rep.record("commutative-monoid", pass, w);
    }
    {
        // x * sup(S) = sup { x * s : s in S } over every nonempty subset.
        // The empty subset is excluded: truncated addition keeps x * bottom
        // = x, and that structure must count as lawful.
        bool pass = true;
        std::string w;
        for (int x = 0; x < n && pass; x++)
            for (std::uint64_t mask = 1; mask < (1ULL << n) && pass; mask++) {
                std::vector<int> subset, image;
                for (int i = 0; i < n; i++)
                    if (mask & (1ULL << i)) {
                        subset.push_back(i);
                        image.push_back(q.mult[x][i]);
                    }
                auto supS = q.sup_of(subset);
                auto supI = q.sup_of(image);
                if (!supS || !supI) continue; // reported by the lattice law
                if (q.mult[x][*supS] != *supI) {
                    pass = false;
                    w = q.names[x] + " * sup(S) = " + q.names[q.mult[x][*supS]] +
                        " but sup of the image is " + q.names[*supI] + " (|S| = " +
                        std::to_string(subset.size()) + ")";
                }
            }
        rep.record("distributivity", pass, w);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Generalized metric domains and their arrows.
// ---------------------------------------------------------------------------

struct GmdObject {
    std::vector<std::string> carrier;
    Quantale quantale;
    // delta[a][q][b]
    std::vector<std::vector<std::vector<bool>>> delta;

    int points() const { return (int)carrier.size(); }
    bool rel(int a, int q, int b) const { return delta[a][q][b]; }
};

inline GmdObject make_gmd(std::vector<std::string> carrier, Quantale q) {
    GmdObject o;
    o.carrier = std::move(carrier);
    o.quantale = std::move(q);
    o.delta.assign(o.points(), std::vector<std::vector<bool>>(
                                   o.quantale.size(), std::vector<bool>(o.points(), false)));
    return o;
}

inline LawReport check_gmd(const GmdObject& o) {
    LawReport rep;
    int n = o.points(), m = o.quantale.size();
    {
        // One direction only: the unit distance separates. Self-relation at
        // the unit is not required; function spaces genuinely lack it.
        bool pass = true;
        std::string w;
        for (int a = 0; a < n && pass; a++)
            for (int b = 0; b < n && pass; b++)
                if (a != b && o.rel(a, o.quantale.unit, b)) {
                    pass = false;
                    w = o.carrier[a] + " and " + o.carrier[b] + " related at the unit distance";
                }
        rep.record("indistancy", pass, w);
    }
    {
        bool pass = true;
        std::string w;
        for (int a = 0; a < n && pass; a++)
            for (int q = 0; q < m && pass; q++)
                for (int b = 0; b < n && pass; b++)
                    if (o.rel(a, q, b) && !o.rel(b, q, a)) {
                        pass = false;
                        w = "(" + o.carrier[a] + ", " + o.quantale.names[q] + ", " +
                            o.carrier[b] + ") holds but its flip does not";
                    }
        rep.record("symmetry", pass, w);
    }
    {
        // Three-hop form with the middle self-distance: from x to y, y to
        // itself, y to z.
        bool pass = true;
        std::string w;
        for (int x = 0; x < n && pass; x++)
            for (int y = 0; y < n && pass; y++)
                for (int z = 0; z < n && pass; z++)
                    for (int d = 0; d < m && pass; d++) {
                        if (!o.rel(x, d, y)) continue;
                        for (int e = 0; e < m && pass; e++) {
                            if (!o.rel(y, e, y)) continue;
                            for (int f = 0; f < m && pass; f++) {
                                if (!o.rel(y, f, z)) continue;
                                int def = o.quantale.mult[o.quantale.mult[d][e]][f];
                                if (!o.rel(x, def, z)) {
                                    pass = false;
                                    w = "hops " + o.carrier[x] + " -" + o.quantale.names[d] +
                                        "-> " + o.carrier[y] + " -" + o.quantale.names[e] +
                                        "-> " + o.carrier[y] + " -" + o.quantale.names[f] +
                                        "-> " + o.carrier[z] + " do not compose at " +
                                        o.quantale.names[def];
                                    break;
                                }
                            }
                        }
                    }
        rep.record("triangularity", pass, w);
    }
    return rep;
}

struct GmdArrow {
    std::vector<int> f;                 // indexed by source carrier
    std::vector<std::vector<int>> zeta; // zeta[q][a], into the target quantale
};

inline bool arrow_eq(const GmdArrow& a, const GmdArrow& b) {
    return a.f == b.f && a.zeta == b.zeta;
}

/// Both clauses of the arrow condition: a related pair maps to a related
/// pair under zeta taken at either endpoint.
inline LawReport check_arrow(const GmdObject& src, const GmdObject& dst, const GmdArrow& ar) {
    LawReport rep;
    bool pass = true;
    std::string w;
    for (int a = 0; a < src.points() && pass; a++)
        for (int q = 0; q < src.quantale.size() && pass; q++)
            for (int b = 0; b < src.points() && pass; b++) {
                if (!src.rel(a, q, b)) continue;
                if (!dst.rel(ar.f[a], ar.zeta[q][a], ar.f[b])) {
                    pass = false;
                    w = "clause 1 fails at (" + src.carrier[a] + ", " + src.quantale.names[q] +
                        ", " + src.carrier[b] + ")";
                } else if (!dst.rel(ar.f[a], ar.zeta[q][b], ar.f[b])) {
                    pass = false;
                    w = "clause 2 fails at (" + src.carrier[a] + ", " + src.quantale.names[q] +
                        ", " + src.carrier[b] + ")";
                }
            }
    rep.record("arrow-condition", pass, w);
    return rep;
}

inline GmdArrow gmd_id(const GmdObject& o) {
    GmdArrow ar;
    ar.f.resize(o.points());
    for (int a = 0; a < o.points(); a++) ar.f[a] = a;
    ar.zeta.assign(o.quantale.size(), std::vector<int>(o.points()));
    for (int q = 0; q < o.quantale.size(); q++)
        for (int a = 0; a < o.points(); a++) ar.zeta[q][a] = q;
    return ar;
}

/// Composition (g, eta) after (f, zeta): the map composes, and the distance
/// part is eta taken at the transported distance and mapped point.
inline GmdArrow gmd_compose(const GmdArrow& g, const GmdArrow& f) {
    GmdArrow ar;
    ar.f.resize(f.f.size());
    for (std::size_t a = 0; a < f.f.size(); a++) ar.f[a] = g.f[f.f[a]];
    ar.zeta.assign(f.zeta.size(), std::vector<int>(f.f.size()));
    for (std::size_t q = 0; q < f.zeta.size(); q++)
        for (std::size_t a = 0; a < f.f.size(); a++)
            ar.zeta[q][a] = g.zeta[f.zeta[q][a]][f.f[a]];
    return ar;
}

// ---------------------------------------------------------------------------
// Terminal object, binary products, exponentials.
// ---------------------------------------------------------------------------

inline GmdObject gmd_terminal() {
    GmdObject o = make_gmd({"*"}, chain_quantale(1));
    o.delta[0][0][0] = true;
    return o;
}

inline GmdArrow terminal_arrow(const GmdObject& from) {
    GmdArrow ar;
    ar.f.assign(from.points(), 0);
    ar.zeta.assign(from.quantale.size(), std::vector<int>(from.points(), 0));
    return ar;
}

inline Quantale product_quantale(const Quantale& q, const Quantale& s) {
    Quantale out;
    int n = q.size(), m = s.size();
    for (int i = 0; i < n; i++)
        for (int j = 0; j < m; j++) out.names.push_back("(" + q.names[i] + "," + s.names[j] + ")");
    out.leq.assign(n * m, std::vector<bool>(n * m, false));
    out.mult.assign(n * m, std::vector<int>(n * m, 0));
    for (int i = 0; i < n * m; i++)
        for (int j = 0; j < n * m; j++) {
            int qi = i / m, si = i % m, qj = j / m, sj = j % m;
            out.leq[i][j] = q.leq[qi][qj] && s.leq[si][sj];
            out.mult[i][j] = q.mult[qi][qj] * m + s.mult[si][sj];
        }
    out.unit = q.unit * m + s.unit;
    return out;
}

struct GmdProduct {
    GmdObject obj;
    GmdArrow proj1, proj2;
};

inline GmdProduct gmd_product(const GmdObject& A, const GmdObject& B) {
    int na = A.points(), nb = B.points();
    int ma = A.quantale.size(), mb = B.quantale.size();
    GmdProduct out;
    std::vector<std::string> carrier;
    for (int a = 0; a < na; a++)
        for (int b = 0; b < nb; b++) carrier.push_back("(" + A.carrier[a] + "," + B.carrier[b] + ")");
    out.obj = make_gmd(std::move(carrier), product_quantale(A.quantale, B.quantale));
    for (int a = 0; a < na; a++)
        for (int b = 0; b < nb; b++)
            for (int a2 = 0; a2 < na; a2++)
                for (int b2 = 0; b2 < nb; b2++)
                    for (int q = 0; q < ma; q++)
                        for (int s = 0; s < mb; s++)
                            out.obj.delta[a * nb + b][q * mb + s][a2 * nb + b2] =
                                A.rel(a, q, a2) && B.rel(b, s, b2);
    out.proj1.f.resize(na * nb);
    out.proj2.f.resize(na * nb);
    for (int a = 0; a < na; a++)
        for (int b = 0; b < nb; b++) {
            out.proj1.f[a * nb + b] = a;
            out.proj2.f[a * nb + b] = b;
        }
    out.proj1.zeta.assign(ma * mb, std::vector<int>(na * nb));
    out.proj2.zeta.assign(ma * mb, std::vector<int>(na * nb));
    for (int q = 0; q < ma; q++)
        for (int s = 0; s < mb; s++)
            for (int p = 0; p < na * nb; p++) {
                out.proj1.zeta[q * mb + s][p] = q;
                out.proj2.zeta[q * mb + s][p] = s;
            }
    return out;
}

/// Pairing of (f, zeta): C -> A and (g, eta): C -> B into C -> A x B. Only
/// B's sizes enter the pair-index arithmetic.
inline GmdArrow gmd_pair(const GmdObject& C, const GmdObject& B, const GmdArrow& f,
                         const GmdArrow& g) {
    int nb = B.points(), mb = B.quantale.size();
    GmdArrow ar;
    ar.f.resize(C.points());
    for (int c = 0; c < C.points(); c++) ar.f[c] = f.f[c] * nb + g.f[c];
    ar.zeta.assign(C.quantale.size(), std::vector<int>(C.points()));
    for (int t = 0; t < C.quantale.size(); t++)
        for (int c = 0; c < C.points(); c++) ar.zeta[t][c] = f.zeta[t][c] * mb + g.zeta[t][c];
    return ar;
}

/// Finite function spaces encoded as mixed-radix indices; digit b is the
/// image of domain point b.
struct FunSpace {
    int domSize, codSize;
    long long count;

    FunSpace(int dom, int cod) : domSize(dom), codSize(cod), count(1) {
        for (int i = 0; i < dom; i++) {
            count *= cod;
            if (count > kGmdSizeGuard)
                fail(ErrorKind::SizeGuard, "function space too large to enumerate");
        }
    }
    int apply(long long fIdx, int x) const {
        for (int i = 0; i < x; i++) fIdx /= codSize;
        return (int)(fIdx % codSize);
    }
    long long encode(const std::vector<int>& table) const {
        long long idx = 0;
        for (int i = domSize - 1; i >= 0; i--) idx = idx * codSize + table[i];
        return idx;
    }
};

struct GmdExponential {
    GmdObject obj;      // carrier C^B over the quantale T^(S x B)
    GmdArrow evalArrow; // from product(obj, B) to C
    FunSpace funs;      // carrier encoding
    FunSpace distFuns;  // quantale encoding over S x B pairs (index s * |B| + b)
};

inline GmdExponential gmd_exponential(const GmdObject& B, const GmdObject& C) {
    int nb = B.points(), nc = C.points();
    int ms = B.quantale.size(), mt = C.quantale.size();
    FunSpace funs(nb, nc);
    FunSpace distFuns(ms * nb, mt);
    if (funs.count * funs.count * distFuns.count > kGmdSizeGuard)
        fail(ErrorKind::SizeGuard, "exponential law table too large to enumerate");

    Quantale tq;
    for (long long d = 0; d < distFuns.count; d++) {
        std::string nm = "[";
        for (int i = 0; i < ms * nb; i++) {
            if (i) nm += ",";
            nm += C.quantale.names[distFuns.apply(d, i)];
        }
        tq.names.push_back(nm + "]");
    }
    tq.leq.assign(distFuns.count, std::vector<bool>(distFuns.count, false));
    tq.mult.assign(distFuns.count, std::vector<int>(distFuns.count, 0));
    for (long long d = 0; d < distFuns.count; d++)
        for (long long e = 0; e < distFuns.count; e++) {
            bool le = true;
            std::vector<int> prod(ms * nb);
            for (int i = 0; i < ms * nb; i++) {
                int di = distFuns.apply(d, i), ei = distFuns.apply(e, i);
                if (!C.quantale.leq[di][ei]) le = false;
                prod[i] = C.quantale.mult[di][ei];
            }
            tq.leq[d][e] = le;
            tq.mult[d][e] = (int)distFuns.encode(prod);
        }
    tq.unit = (int)distFuns.encode(std::vector<int>(ms * nb, C.quantale.unit));

    std::vector<std::string> carrier;
    for (long long f = 0; f < funs.count; f++) {
        std::string nm = "[";
        for (int b = 0; b < nb; b++) {
            if (b) nm += ",";
            nm += C.carrier[funs.apply(f, b)];
        }
        carrier.push_back(nm + "]");
    }

    GmdExponential out{make_gmd(std::move(carrier), std::move(tq)), {}, funs, distFuns};

    // Related at d when every related pair of inputs maps to outputs related
    // at d sampled at either endpoint of the premise, mirroring the two
    // clauses of the arrow condition. The second clause is what keeps the
    // relation symmetric and makes eval an arrow.
    for (long long f = 0; f < funs.count; f++)
        for (long long d = 0; d < distFuns.count; d++)
            for (long long f2 = 0; f2 < funs.count; f2++) {
                bool ok = true;
                for (int b = 0; b < nb && ok; b++)
                    for (int s = 0; s < ms && ok; s++)
                        for (int b2 = 0; b2 < nb && ok; b2++) {
                            if (!B.rel(b, s, b2)) continue;
                            int db = distFuns.apply(d, s * nb + b);
                            int db2 = distFuns.apply(d, s * nb + b2);
                            if (!C.rel(funs.apply(f, b), db, funs.apply(f2, b2)) ||
                                !C.rel(funs.apply(f, b), db2, funs.apply(f2, b2)))
                                ok = false;
                        }
                out.obj.delta[f][d][f2] = ok;
            }

    // eval: (C^B x B) -> C, with eval'((d,s),(f,b)) = d(s,b).
    int expPts = (int)funs.count;
    int expQ = (int)distFuns.count;
    out.evalArrow.f.resize(expPts * nb);
    for (long long f = 0; f < funs.count; f++)
        for (int b = 0; b < nb; b++) out.evalArrow.f[f * nb + b] = funs.apply(f, b);
    out.evalArrow.zeta.assign(expQ * ms, std::vector<int>(expPts * nb));
    for (int d = 0; d < expQ; d++)
        for (int s = 0; s < ms; s++)
            for (int f = 0; f < expPts; f++)
                for (int b = 0; b < nb; b++)
                    out.evalArrow.zeta[d * ms + s][f * nb + b] = distFuns.apply(d, s * nb + b);
    return out;
}

/// Curry g: A x B -> C into A -> C^B, both on points and distances.
inline GmdArrow gmd_curry(const GmdExponential& exp, const GmdObject& A, const GmdObject& B,
                          const GmdArrow& g) {
    int nb = B.points(), ms = B.quantale.size();
    GmdArrow ar;
    ar.f.resize(A.points());
    for (int a = 0; a < A.points(); a++) {
        std::vector<int> table(nb);
        for (int b = 0; b < nb; b++) table[b] = g.f[a * nb + b];
        ar.f[a] = (int)exp.funs.encode(table);
    }
    ar.zeta.assign(A.quantale.size(), std::vector<int>(A.points()));
    for (int q = 0; q < A.quantale.size(); q++)
        for (int a = 0; a < A.points(); a++) {
            std::vector<int> table(ms * nb);
            for (int s = 0; s < ms; s++)
                for (int b = 0; b < nb; b++)
                    table[s * nb + b] = g.zeta[q * ms + s][a * nb + b];
            ar.zeta[q][a] = (int)exp.distFuns.encode(table);
        }
    return ar;
}

/// Product of two arrows u: A1 -> B1 and v: A2 -> B2, for the exponential
/// beta-law diagram. B1 never enters the index arithmetic.
inline GmdArrow gmd_arrow_product(const GmdObject& A1, const GmdObject& A2, const GmdObject& B2,
                                  const GmdArrow& u, const GmdArrow& v) {
    int na2 = A2.points(), mb2 = A2.quantale.size();
    int nb2 = B2.points(), nbq2 = B2.quantale.size();
    GmdArrow ar;
    ar.f.resize(A1.points() * na2);
    for (int a = 0; a < A1.points(); a++)
        for (int b = 0; b < na2; b++) ar.f[a * na2 + b] = u.f[a] * nb2 + v.f[b];
    ar.zeta.assign(A1.quantale.size() * mb2, std::vector<int>(A1.points() * na2));
    for (int q = 0; q < A1.quantale.size(); q++)
        for (int s = 0; s < mb2; s++)
            for (int a = 0; a < A1.points(); a++)
                for (int b = 0; b < na2; b++)
                    ar.zeta[q * mb2 + s][a * na2 + b] = u.zeta[q][a] * nbq2 + v.zeta[s][b];
    return ar;
}

} // namespace stlr
