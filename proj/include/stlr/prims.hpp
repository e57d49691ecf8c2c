#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "stlr/error.hpp"
#include "stlr/syntax.hpp"

namespace stlr {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed interval over the extended reals. Invariant: lo <= hi.
struct Interval {
    double lo = 0, hi = 0;

    double width() const {
        if (std::isinf(lo) || std::isinf(hi)) return kInf;
        return hi - lo;
    }
    bool contains(double x, double pad = 0.0) const { return x >= lo - pad && x <= hi + pad; }
};

using PrimEvalFn = std::function<double(const std::vector<double>&)>;
using PrimIntervalFn = std::function<Interval(const std::vector<Interval>&)>;

/// One registered primitive: how to run it on reals, how to enclose its
/// image on boxes, and whether it maps bounded sets to bounded sets.
struct PrimSpec {
    std::string name;
    int arity = 1;
    bool weakBounded = true;
    std::string evalId;
    std::string intervalId;
    std::optional<double> lipschitz;
    PrimEvalFn eval;
    PrimIntervalFn interval;
};

namespace prim_detail {

inline double product_or_zero(double a, double b) {
    // Interval-arithmetic convention: 0 * inf = 0 at box corners.
    if (a == 0.0 || b == 0.0) return 0.0;
    return a * b;
}

inline Interval sin_like_interval(const Interval& x, bool cosine) {
    const double pi = std::numbers::pi;
    if (x.width() >= 2 * pi) return {-1.0, 1.0};
    auto f = [&](double v) { return cosine ? std::cos(v) : std::sin(v); };
    double lo = std::min(f(x.lo), f(x.hi));
    double hi = std::max(f(x.lo), f(x.hi));
    // Critical points: sin peaks at pi/2 + k*pi, cos at k*pi.
    double phase = cosine ? 0.0 : pi / 2;
    double k0 = std::ceil((x.lo - phase) / pi);
    for (double k = k0; phase + k * pi <= x.hi; k += 1.0) {
        // Value at the critical point phase + k*pi is (-1)^k for both.
        double crit = (std::llround(k) % 2 == 0) ? 1.0 : -1.0;
        lo = std::min(lo, crit);
        hi = std::max(hi, crit);
    }
    return {lo, hi};
}

} // namespace prim_detail

inline const std::map<std::string, std::pair<int, PrimEvalFn>>& builtin_evaluators() {
    static const std::map<std::string, std::pair<int, PrimEvalFn>> table = {
        {"sin", {1, [](const std::vector<double>& a) { return std::sin(a[0]); }}},
        {"cos", {1, [](const std::vector<double>& a) { return std::cos(a[0]); }}},
        {"add1", {1, [](const std::vector<double>& a) { return a[0] + 1.0; }}},
        {"pred", {1, [](const std::vector<double>& a) { return a[0] - 1.0; }}},
        {"mul2", {1, [](const std::vector<double>& a) { return 2.0 * a[0]; }}},
        {"recip", {1, [](const std::vector<double>& a) { return a[0] == 0.0 ? 0.0 : 1.0 / a[0]; }}},
        {"plus", {2, [](const std::vector<double>& a) { return a[0] + a[1]; }}},
        {"minus", {2, [](const std::vector<double>& a) { return a[0] - a[1]; }}},
        {"mul", {2, [](const std::vector<double>& a) { return a[0] * a[1]; }}},
    };
    return table;
}

inline const std::map<std::string, std::pair<int, PrimIntervalFn>>& builtin_intervals() {
    using prim_detail::product_or_zero;
    static const std::map<std::string, std::pair<int, PrimIntervalFn>> table = {
        {"sin",
         {1, [](const std::vector<Interval>& b) { return prim_detail::sin_like_interval(b[0], false); }}},
        {"cos",
         {1, [](const std::vector<Interval>& b) { return prim_detail::sin_like_interval(b[0], true); }}},
        {"add1", {1, [](const std::vector<Interval>& b) { return Interval{b[0].lo + 1, b[0].hi + 1}; }}},
        {"pred", {1, [](const std::vector<Interval>& b) { return Interval{b[0].lo - 1, b[0].hi - 1}; }}},
        {"mul2", {1, [](const std::vector<Interval>& b) { return Interval{2 * b[0].lo, 2 * b[0].hi}; }}},
        {"recip",
         {1,
          [](const std::vector<Interval>& b) -> Interval {
              const Interval& x = b[0];
              if (x.lo == 0.0 && x.hi == 0.0) return {0.0, 0.0};
              if (x.lo <= 0.0 && x.hi >= 0.0) return {-kInf, kInf};
              double a = 1.0 / x.lo, c = 1.0 / x.hi;
              return {std::min(a, c), std::max(a, c)};
          }}},
        {"plus",
         {2, [](const std::vector<Interval>& b) {
              return Interval{b[0].lo + b[1].lo, b[0].hi + b[1].hi};
          }}},
        {"minus",
         {2, [](const std::vector<Interval>& b) {
              return Interval{b[0].lo - b[1].hi, b[0].hi - b[1].lo};
          }}},
        {"mul",
         {2, [](const std::vector<Interval>& b) -> Interval {
              double c[4] = {product_or_zero(b[0].lo, b[1].lo), product_or_zero(b[0].lo, b[1].hi),
                             product_or_zero(b[0].hi, b[1].lo), product_or_zero(b[0].hi, b[1].hi)};
              return {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
          }}},
    };
    return table;
}

class PrimRegistry {
public:
    void add(PrimSpec spec) { specs_[spec.name] = std::move(spec); }

    bool has(const std::string& name) const { return specs_.count(name) != 0; }

    const PrimSpec& get(const std::string& name) const {
        auto it = specs_.find(name);
        if (it == specs_.end()) fail(ErrorKind::Registry, "unknown primitive: " + name);
        return it->second;
    }

    const std::map<std::string, PrimSpec>& all() const { return specs_; }

private:
    std::map<std::string, PrimSpec> specs_;
};

inline PrimSpec make_builtin_prim(const std::string& name, const std::string& evalId,
                                  const std::string& intervalId, bool weakBounded,
                                  std::optional<double> lipschitz) {
    auto evIt = builtin_evaluators().find(evalId);
    if (evIt == builtin_evaluators().end())
        fail(ErrorKind::Registry, "unknown builtin evaluator id: " + evalId);
    auto ivIt = builtin_intervals().find(intervalId);
    if (ivIt == builtin_intervals().end())
        fail(ErrorKind::Registry, "unknown builtin interval id: " + intervalId);
    if (evIt->second.first != ivIt->second.first)
        fail(ErrorKind::Registry, "evaluator and interval arity disagree for " + name);
    PrimSpec s;
    s.name = name;
    s.arity = evIt->second.first;
    s.weakBounded = weakBounded;
    s.evalId = evalId;
    s.intervalId = intervalId;
    s.lipschitz = lipschitz;
    s.eval = evIt->second.second;
    s.interval = ivIt->second.second;
    return s;
}

inline const PrimRegistry& default_registry() {
    static const PrimRegistry reg = [] {
        PrimRegistry r;
        r.add(make_builtin_prim("sin", "sin", "sin", true, 1.0));
        r.add(make_builtin_prim("cos", "cos", "cos", true, 1.0));
        r.add(make_builtin_prim("add1", "add1", "add1", true, 1.0));
        r.add(make_builtin_prim("pred", "pred", "pred", true, 1.0));
        r.add(make_builtin_prim("mul2", "mul2", "mul2", true, 2.0));
        // recip sends every punctured neighborhood of 0 to an unbounded set.
        r.add(make_builtin_prim("recip", "recip", "recip", false, std::nullopt));
        r.add(make_builtin_prim("plus", "plus", "plus", true, std::nullopt));
        r.add(make_builtin_prim("minus", "minus", "minus", true, std::nullopt));
        r.add(make_builtin_prim("mul", "mul", "mul", true, std::nullopt));
        return r;
    }();
    return reg;
}

namespace prim_detail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

} // namespace prim_detail

/// Registry file format: one [section] per primitive, with keys
/// weak_bounded, eval, interval, lipschitz. Evaluators and interval
/// extensions are referenced by builtin id; arity comes from the id.
inline PrimRegistry parse_registry_text(const std::string& text) {
    using prim_detail::trim;
    using prim_detail::unquote;
    PrimRegistry reg;
    std::istringstream in(text);
    std::string line, section;
    std::map<std::string, std::map<std::string, std::string>> sections;
    std::vector<std::string> order;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail(ErrorKind::Parse, "registry: unterminated section header", SourcePos{lineno, 1});
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                fail(ErrorKind::Parse, "registry: empty section name", SourcePos{lineno, 1});
            if (!sections.count(section)) order.push_back(section);
            sections[section];
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos || section.empty())
            fail(ErrorKind::Parse, "registry: expected `key = value` inside a section",
                 SourcePos{lineno, 1});
        sections[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    for (auto& name : order) {
        auto& kv = sections[name];
        auto get = [&](const std::string& key, const std::string& dflt) {
            auto it = kv.find(key);
            return it == kv.end() ? dflt : it->second;
        };
        std::string evalId = unquote(get("eval", name));
        std::string intervalId = unquote(get("interval", evalId));
        std::string wb = get("weak_bounded", "true");
        if (wb != "true" && wb != "false")
            fail(ErrorKind::Parse, "registry: weak_bounded must be true or false in [" + name + "]");
        std::optional<double> lip;
        if (kv.count("lipschitz")) {
            try {
                lip = std::stod(kv.at("lipschitz"));
            } catch (...) {
                fail(ErrorKind::Parse, "registry: bad lipschitz value in [" + name + "]");
            }
            if (*lip < 0) fail(ErrorKind::Parse, "registry: negative lipschitz in [" + name + "]");
        }
        PrimSpec spec = make_builtin_prim(name, evalId, intervalId, wb == "true", lip);
        if (kv.count("arity")) {
            int declared = 0;
            try {
                declared = std::stoi(kv.at("arity"));
            } catch (...) {
                fail(ErrorKind::Parse, "registry: bad arity value in [" + name + "]");
            }
            if (declared != spec.arity)
                fail(ErrorKind::Registry, "registry: declared arity " + std::to_string(declared) +
                                              " does not match evaluator arity for [" + name + "]");
        }
        reg.add(std::move(spec));
    }
    return reg;
}

inline PrimRegistry load_registry(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Config, "cannot open primitive registry: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_registry_text(ss.str());
}

} // namespace stlr
