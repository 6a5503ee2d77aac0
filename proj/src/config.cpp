#include "stfde/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "stfde/expr.hpp"

namespace stfde::config {

namespace {

struct Value {
    enum class Kind { number, string, array, boolean } kind;
    double num = 0.0;
    bool b = false;
    std::string str;
    std::vector<double> arr;
};

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

Value parse_value(const std::string& raw, int line_no) {
    const std::string v = trim(raw);
    if (v.empty()) throw domain_error("scenario: empty value at line " + std::to_string(line_no));
    Value out;
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"')
            throw domain_error("scenario: unterminated string at line " + std::to_string(line_no));
        out.kind = Value::Kind::string;
        out.str = v.substr(1, v.size() - 2);
        return out;
    }
    if (v == "true" || v == "false") {
        out.kind = Value::Kind::boolean;
        out.b = v == "true";
        return out;
    }
    if (v.front() == '[') {
        if (v.back() != ']')
            throw domain_error("scenario: unterminated array at line " + std::to_string(line_no));
        out.kind = Value::Kind::array;
        std::string body = v.substr(1, v.size() - 2);
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            try {
                out.arr.push_back(std::stod(item));
            } catch (...) {
                throw domain_error("scenario: bad array element '" + item + "' at line " +
                                   std::to_string(line_no));
            }
        }
        return out;
    }
    try {
        std::size_t used = 0;
        out.num = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        out.kind = Value::Kind::number;
        return out;
    } catch (...) {
        throw domain_error("scenario: cannot parse value '" + v + "' at line " +
                           std::to_string(line_no));
    }
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_array(const std::vector<double>& a) {
    std::string s = "[";
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (i) s += ", ";
        s += fmt_double(a[i]);
    }
    return s + "]";
}

} // namespace

ScenarioConfig ScenarioConfig::parse(const std::string& text) {
    std::map<std::string, Value> kv;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw domain_error("scenario: expected 'key = value' at line " +
                               std::to_string(line_no));
        const std::string key = trim(line.substr(0, eq));
        if (kv.count(key))
            throw domain_error("scenario: duplicate key '" + key + "' at line " +
                               std::to_string(line_no));
        kv[key] = parse_value(line.substr(eq + 1), line_no);
    }

    ScenarioConfig c;
    auto num = [&](const char* k, double& dst) {
        auto it = kv.find(k);
        if (it == kv.end()) return;
        if (it->second.kind != Value::Kind::number)
            throw domain_error(std::string("scenario: '") + k + "' must be a number");
        dst = it->second.num;
        kv.erase(it);
    };
    auto integer = [&](const char* k, auto& dst) {
        auto it = kv.find(k);
        if (it == kv.end()) return;
        if (it->second.kind != Value::Kind::number ||
            it->second.num != std::floor(it->second.num))
            throw domain_error(std::string("scenario: '") + k + "' must be an integer");
        dst = (std::remove_reference_t<decltype(dst)>)it->second.num;
        kv.erase(it);
    };
    auto str = [&](const char* k, std::string& dst) {
        auto it = kv.find(k);
        if (it == kv.end()) return;
        if (it->second.kind != Value::Kind::string)
            throw domain_error(std::string("scenario: '") + k + "' must be a string");
        dst = it->second.str;
        kv.erase(it);
    };
    auto arr = [&](const char* k, std::vector<double>& dst) {
        auto it = kv.find(k);
        if (it == kv.end()) return;
        if (it->second.kind != Value::Kind::array)
            throw domain_error(std::string("scenario: '") + k + "' must be an array");
        dst = it->second.arr;
        kv.erase(it);
    };

    num("alpha", c.alpha);
    num("delta", c.delta);
    num("T", c.T);
    integer("steps", c.steps);
    integer("modes", c.modes);
    integer("grid_points", c.grid_points);
    integer("paths", c.paths);
    integer("seed", c.seed);
    str("operator", c.op);
    str("a", c.a_expr);
    str("c", c.c_expr);
    arr("u0", c.u0);
    arr("u1", c.u1);
    arr("f1", c.f1);
    arr("f2", c.f2);
    str("g1", c.g1_expr);
    str("g2", c.g2_expr);
    arr("gamma_pts", c.gamma_pts);
    if (!kv.empty()) throw domain_error("scenario: unknown key '" + kv.begin()->first + "'");
    return c;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw domain_error("scenario: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

std::string ScenarioConfig::serialize() const {
    std::ostringstream os;
    os << "# stfde scenario\n";
    os << "alpha = " << fmt_double(alpha) << "\n";
    os << "delta = " << fmt_double(delta) << "\n";
    os << "T = " << fmt_double(T) << "\n";
    os << "steps = " << steps << "\n";
    os << "modes = " << modes << "\n";
    os << "grid_points = " << grid_points << "\n";
    os << "paths = " << paths << "\n";
    os << "seed = " << seed << "\n";
    os << "operator = \"" << op << "\"\n";
    os << "a = \"" << a_expr << "\"\n";
    os << "c = \"" << c_expr << "\"\n";
    os << "u0 = " << fmt_array(u0) << "\n";
    os << "u1 = " << fmt_array(u1) << "\n";
    os << "f1 = " << fmt_array(f1) << "\n";
    os << "f2 = " << fmt_array(f2) << "\n";
    os << "g1 = \"" << g1_expr << "\"\n";
    os << "g2 = \"" << g2_expr << "\"\n";
    os << "gamma_pts = " << fmt_array(gamma_pts) << "\n";
    return os.str();
}

forward::Scenario ScenarioConfig::build() const {
    if (modes < 1) throw domain_error("scenario: modes must be >= 1");
    if (steps < 2) throw domain_error("scenario: steps must be >= 2");
    if (paths < 1) throw domain_error("scenario: paths must be >= 1");
    for (double x : gamma_pts)
        if (x != 0.0 && x != 1.0) throw domain_error("scenario: gamma_pts must be 0 or 1");

    forward::Scenario s;
    s.alpha = alpha;
    s.delta = delta;
    s.T = T;
    s.time_grid = fracops::TimeGrid(T, steps);
    s.n_paths = (int)paths;
    s.seed = (std::uint64_t)seed;

    if (op == "laplace") {
        s.eig = std::make_shared<spectral::EigenSystem>(
            spectral::laplace_1d(modes, std::max(grid_points, 4 * modes)));
    } else if (op == "elliptic") {
        const auto ax = expr::Expression::parse(a_expr, "x");
        const auto cx = expr::Expression::parse(c_expr, "x");
        const int m = std::max(grid_points, 8 * modes);
        const auto af = spectral::SpatialField::sample(m, [&](double x) { return ax.eval(x); });
        const auto cf = spectral::SpatialField::sample(m, [&](double x) { return cx.eval(x); });
        s.eig = std::make_shared<spectral::EigenSystem>(spectral::elliptic_1d(af, cf, modes, m));
    } else {
        throw domain_error("scenario: operator must be \"laplace\" or \"elliptic\"");
    }

    auto pad = [&](std::vector<double> v) {
        v.resize(modes, 0.0);
        return v;
    };
    s.u0_coeffs = pad(u0);
    s.u1_coeffs = pad(u1);
    s.f1_coeffs = pad(f1);
    s.f2_coeffs = pad(f2);

    const auto g1e = expr::Expression::parse(g1_expr, "t");
    const auto g2e = expr::Expression::parse(g2_expr, "t");
    s.g1 = fracops::GridFunction::sample(s.time_grid, [&](double t) { return g1e.eval(t); });
    s.g2 = fracops::GridFunction::sample(s.time_grid, [&](double t) { return g2e.eval(t); });
    return s;
}

void RunConfig::apply_overrides(ScenarioConfig& sc) const {
    if (paths > 0) sc.paths = paths;
    if (steps > 1) sc.steps = steps;
    if (modes > 0) sc.modes = modes;
    if (seed >= 0) sc.seed = (unsigned long long)seed;
}

} // namespace stfde::config
