#include "findim/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "findim/error.hpp"
#include "findim/util.hpp"

namespace findim::config {

namespace {

struct Value {
    bool is_list = false;
    bool is_string = false;          // element type for lists
    double num = 0.0;
    std::string str;
    std::vector<double> nums;
    std::vector<std::string> strs;
    int line = 0;
};

[[noreturn]] void fail(int line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

// Drop a trailing comment, respecting double-quoted strings.
std::string strip_comment(std::string_view line) {
    std::string out;
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (in_str && c == '\\' && i + 1 < line.size()) {
            out += c;
            out += line[++i];
            continue;
        }
        if (c == '"') in_str = !in_str;
        if (c == '#' && !in_str) break;
        out += c;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

int bracket_balance(std::string_view s) {
    int depth = 0;
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (in_str && c == '\\') {
            ++i;
            continue;
        }
        if (c == '"') in_str = !in_str;
        if (in_str) continue;
        if (c == '[') ++depth;
        if (c == ']') --depth;
    }
    return depth;
}

double parse_number(std::string_view tok, int line) {
    tok = trim(tok);
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size())
        fail(line, "expected a number, got '" + std::string(tok) + "'");
    return v;
}

std::string parse_string(std::string_view tok, int line) {
    tok = trim(tok);
    if (tok.size() < 2 || tok.front() != '"' || tok.back() != '"')
        fail(line, "expected a double-quoted string, got '" + std::string(tok) + "'");
    std::string out;
    for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
        if (tok[i] == '\\' && i + 2 < tok.size()) ++i;
        out += tok[i];
    }
    return out;
}

Value parse_value(std::string_view tok, int line) {
    Value v;
    v.line = line;
    tok = trim(tok);
    if (tok.empty()) fail(line, "missing value");
    if (tok.front() == '[') {
        if (tok.back() != ']') fail(line, "unterminated array");
        v.is_list = true;
        std::string_view body = trim(tok.substr(1, tok.size() - 2));
        // split on commas outside strings
        std::vector<std::string_view> items;
        bool in_str = false;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= body.size(); ++i) {
            if (i < body.size() && in_str && body[i] == '\\') {
                ++i;
                continue;
            }
            if (i < body.size() && body[i] == '"') in_str = !in_str;
            if (i == body.size() || (body[i] == ',' && !in_str)) {
                std::string_view item = trim(body.substr(start, i - start));
                if (!item.empty()) items.push_back(item);
                start = i + 1;
            }
        }
        if (!items.empty()) v.is_string = items.front().front() == '"';
        for (auto item : items) {
            if ((item.front() == '"') != v.is_string) fail(line, "mixed array element types");
            if (v.is_string)
                v.strs.push_back(parse_string(item, line));
            else
                v.nums.push_back(parse_number(item, line));
        }
        return v;
    }
    if (tok.front() == '"') {
        v.is_string = true;
        v.str = parse_string(tok, line);
        return v;
    }
    v.num = parse_number(tok, line);
    return v;
}

using Table = std::map<std::string, Value>;

std::map<std::string, Table> parse_tables(std::string_view text) {
    std::map<std::string, Table> tables;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        int first_line = line_no;
        std::string line = strip_comment(raw);
        // multi-line arrays: accumulate until brackets balance
        while (bracket_balance(line) > 0) {
            if (!std::getline(in, raw)) fail(first_line, "unterminated array");
            ++line_no;
            line += ' ';
            line += strip_comment(raw);
        }
        std::string_view sv = trim(line);
        if (sv.empty()) continue;
        if (sv.front() == '[') {
            if (sv.back() != ']') fail(first_line, "malformed table header");
            section = std::string(trim(sv.substr(1, sv.size() - 2)));
            if (section.empty()) fail(first_line, "empty table name");
            tables[section];
            continue;
        }
        auto eq = sv.find('=');
        if (eq == std::string_view::npos) fail(first_line, "expected key = value");
        std::string key{trim(sv.substr(0, eq))};
        if (key.empty()) fail(first_line, "empty key");
        if (section.empty()) fail(first_line, "key outside any table");
        if (tables[section].count(key)) fail(first_line, "duplicate key '" + key + "'");
        tables[section][key] = parse_value(sv.substr(eq + 1), first_line);
    }
    return tables;
}

class TableReader {
  public:
    TableReader(const std::string& name, const Table* t) : name_(name), table_(t) {}

    bool has(const std::string& key) const { return table_ && table_->count(key); }

    double number(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        return number(key);
    }

    double number(const std::string& key) const {
        const Value& v = get(key);
        if (v.is_list || v.is_string) fail(v.line, name_ + "." + key + " must be a number");
        return v.num;
    }

    int integer(const std::string& key, int fallback) const {
        if (!has(key)) return fallback;
        double v = number(key);
        int n = static_cast<int>(v);
        if (static_cast<double>(n) != v)
            fail(get(key).line, name_ + "." + key + " must be an integer");
        return n;
    }

    std::vector<double> numbers(const std::string& key) const {
        const Value& v = get(key);
        if (!v.is_list || v.is_string)
            fail(v.line, name_ + "." + key + " must be a list of numbers");
        return v.nums;
    }

    std::vector<std::string> strings(const std::string& key) const {
        const Value& v = get(key);
        if (!v.is_list || !v.is_string)
            fail(v.line, name_ + "." + key + " must be a list of strings");
        return v.strs;
    }

    const Value& get(const std::string& key) const {
        if (!has(key)) throw ConfigError("config: missing required key " + name_ + "." + key);
        return table_->at(key);
    }

    void allow_only(std::initializer_list<const char*> keys) const {
        if (!table_) return;
        for (const auto& [key, value] : *table_) {
            bool ok = false;
            for (const char* k : keys) ok = ok || key == k;
            if (!ok) fail(value.line, "unknown key " + name_ + "." + key);
        }
    }

  private:
    std::string name_;
    const Table* table_;
};

expr::Expr parse_entry(const std::string& src, int m, const std::string& where, int line) {
    try {
        return expr::parse(src, m);
    } catch (const ParseError& e) {
        fail(line, where + ": " + e.what());
    }
}

}  // namespace

RunConfig parse_config(std::string_view text) {
    auto tables = parse_tables(text);
    for (const auto& [name, table] : tables) {
        (void)table;
        if (name != "system" && name != "solver" && name != "analysis")
            throw ConfigError("config: unknown table [" + name + "]");
    }
    if (!tables.count("system")) throw ConfigError("config: missing [system] table");

    RunConfig cfg;
    {
        TableReader t("system", &tables.at("system"));
        t.allow_only({"m", "D", "f", "g", "alpha", "cutoff"});
        int m = t.integer("m", 0);
        if (m < 1 || m > 16) throw ConfigError("config: system.m must be in 1..16");
        cfg.spec.m = m;
        std::vector<double> d = t.numbers("D");
        if (static_cast<int>(d.size()) != m * m)
            fail(t.get("D").line, "system.D must list m*m entries row-major");
        cfg.spec.D.resize(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) cfg.spec.D(i, j) = d[i * m + j];

        std::vector<std::string> f = t.strings("f");
        if (static_cast<int>(f.size()) != m * m)
            fail(t.get("f").line, "system.f must list m*m entries row-major");
        cfg.spec.f.assign(m, {});
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                cfg.spec.f[i].push_back(parse_entry(f[i * m + j],  m,
                                                    "system.f[" + std::to_string(i * m + j) + "]",
                                                    t.get("f").line));
        std::vector<std::string> g = t.strings("g");
        if (static_cast<int>(g.size()) != m)
            fail(t.get("g").line, "system.g must list m entries");
        for (int i = 0; i < m; ++i)
            cfg.spec.g.push_back(
                parse_entry(g[i], m, "system.g[" + std::to_string(i) + "]", t.get("g").line));

        cfg.spec.alpha = t.number("alpha", 0.8);
        if (!(cfg.spec.alpha > 0.75 && cfg.spec.alpha < 1.0))
            throw ConfigError("config: system.alpha must lie in (3/4, 1)");
        if (t.has("cutoff")) {
            double R = t.number("cutoff");
            if (R <= 0.0) fail(t.get("cutoff").line, "system.cutoff must be positive");
            cfg.spec = system::apply_auto_cutoff(cfg.spec, R);
        }
        double defect = system::boundary_defect(cfg.spec);
        if (defect > 1e-12)
            throw ConfigError(
                "config: f and g must vanish at (x,u) = (0,0) and (1,0); defect " +
                format_double(defect));
    }
    {
        TableReader t("solver", tables.count("solver") ? &tables.at("solver") : nullptr);
        t.allow_only({"n_modes", "dt", "t_end", "transient_cutoff", "quad_points", "dealias",
                      "snapshot_every"});
        pde::SolverSettings& s = cfg.solver;
        s.n_modes = t.integer("n_modes", s.n_modes);
        s.dt = t.number("dt", s.dt);
        s.t_end = t.number("t_end", s.t_end);
        s.transient_cutoff = t.number("transient_cutoff", s.transient_cutoff);
        s.quad_points = t.integer("quad_points", s.quad_points);
        s.dealias = t.number("dealias", s.dealias);
        s.snapshot_every = t.integer("snapshot_every", s.snapshot_every);
        pde::validate(s);
    }
    {
        TableReader t("analysis", tables.count("analysis") ? &tables.at("analysis") : nullptr);
        t.allow_only({"grid", "n_tau", "n_pairs", "hull_pairs", "n_traj", "spectrum_n",
                      "similarity_grid", "similarity_pairs", "seed"});
        AnalysisSettings& a = cfg.analysis;
        a.grid = t.integer("grid", a.grid);
        a.n_tau = t.integer("n_tau", a.n_tau);
        a.n_pairs = t.integer("n_pairs", a.n_pairs);
        a.hull_pairs = t.integer("hull_pairs", a.hull_pairs);
        a.n_traj = t.integer("n_traj", a.n_traj);
        a.spectrum_n = t.integer("spectrum_n", a.spectrum_n);
        a.similarity_grid = t.integer("similarity_grid", a.similarity_grid);
        a.similarity_pairs = t.integer("similarity_pairs", a.similarity_pairs);
        int seed = t.integer("seed", 0);
        if (t.has("seed") && seed < 0) throw ConfigError("config: analysis.seed must be >= 0");
        if (t.has("seed")) a.seed = static_cast<std::uint64_t>(seed);
        if (a.grid < 8 || a.grid % 2 != 0)
            throw ConfigError("config: analysis.grid must be even and at least 8");
        if (a.similarity_grid < 8 || a.similarity_grid % 2 != 0)
            throw ConfigError("config: analysis.similarity_grid must be even and at least 8");
        if (a.n_tau < 2) throw ConfigError("config: analysis.n_tau must be at least 2");
        if (a.n_pairs < 1 || a.hull_pairs < 1 || a.n_traj < 1 || a.spectrum_n < 1)
            throw ConfigError("config: analysis sample counts must be positive");
        if (a.similarity_pairs < 0)
            throw ConfigError("config: analysis.similarity_pairs must be >= 0");
    }
    return cfg;
}

RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

void save(std::ostream& os, const RunConfig& cfg) {
    const system::SystemSpec& s = cfg.spec;
    os << "[system]\n";
    os << "m = " << s.m << "\n";
    os << "alpha = " << format_double(s.alpha) << "\n";
    // no cutoff key: the expressions below already carry any applied cutoff
    os << "D = [";
    for (int i = 0; i < s.m; ++i)
        for (int j = 0; j < s.m; ++j)
            os << (i + j ? ", " : "") << format_double(s.D(i, j));
    os << "]\n";
    os << "f = [\n";
    for (int i = 0; i < s.m; ++i) {
        os << "  ";
        for (int j = 0; j < s.m; ++j)
            os << '"' << expr::to_string(s.f[i][j]) << '"' << (i + 1 == s.m && j + 1 == s.m ? "" : ", ");
        os << "\n";
    }
    os << "]\n";
    os << "g = [\n";
    for (int i = 0; i < s.m; ++i)
        os << "  \"" << expr::to_string(s.g[i]) << '"' << (i + 1 == s.m ? "" : ",") << "\n";
    os << "]\n\n";

    const pde::SolverSettings& so = cfg.solver;
    os << "[solver]\n";
    os << "n_modes = " << so.n_modes << "\n";
    os << "dt = " << format_double(so.dt) << "\n";
    os << "t_end = " << format_double(so.t_end) << "\n";
    os << "transient_cutoff = " << format_double(so.transient_cutoff) << "\n";
    os << "quad_points = " << so.quad_points << "\n";
    os << "dealias = " << format_double(so.dealias) << "\n";
    os << "snapshot_every = " << so.snapshot_every << "\n\n";

    const AnalysisSettings& a = cfg.analysis;
    os << "[analysis]\n";
    os << "grid = " << a.grid << "\n";
    os << "n_tau = " << a.n_tau << "\n";
    os << "n_pairs = " << a.n_pairs << "\n";
    os << "hull_pairs = " << a.hull_pairs << "\n";
    os << "n_traj = " << a.n_traj << "\n";
    os << "spectrum_n = " << a.spectrum_n << "\n";
    os << "similarity_grid = " << a.similarity_grid << "\n";
    os << "similarity_pairs = " << a.similarity_pairs << "\n";
    os << "seed = " << a.seed << "\n";
}

}  // namespace findim::config
