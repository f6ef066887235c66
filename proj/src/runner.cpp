#include "decohist/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "decohist/decoherence.hpp"
#include "decohist/errors.hpp"
#include "decohist/hilbert.hpp"
#include "decohist/histories.hpp"
#include "decohist/maxent.hpp"
#include "decohist/models.hpp"
#include "decohist/random.hpp"
#include "decohist/serialize.hpp"
#include "decohist/theorems.hpp"

namespace decohist {

namespace {

using nlohmann::json;

constexpr const char* known_kinds =
    "decoherence, maxent, second-law, ehrenfest, theorem-search, certainty";

struct Violations {
    std::vector<std::string> list;
    void add(std::string entry) { list.push_back(std::move(entry)); }
    bool ok() const { return list.empty(); }
};

// ---- generic JSON field helpers -------------------------------------------

bool get_finite(const json& j, double& out) {
    if (!j.is_number()) return false;
    out = j.get<double>();
    return std::isfinite(out);
}

bool get_int(const json& j, long long& out) {
    if (!j.is_number_integer() && !j.is_number_unsigned()) return false;
    out = j.get<long long>();
    return true;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where, Violations& out) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* k) { return it.key() == k; });
        if (!known) out.add(where + ": unknown field '" + it.key() + "'");
    }
}

// A finite number, or a [re, im] pair of finite numbers.
bool parse_complex(const json& j, Complex& out) {
    double re = 0.0;
    if (get_finite(j, re)) {
        out = Complex(re, 0.0);
        return true;
    }
    double im = 0.0;
    if (j.is_array() && j.size() == 2 && get_finite(j[0], re) && get_finite(j[1], im)) {
        out = Complex(re, im);
        return true;
    }
    return false;
}

bool parse_cvector(const json& j, Vector& out) {
    if (!j.is_array() || j.empty()) return false;
    out.resize(static_cast<Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) {
        Complex entry;
        if (!parse_complex(j[k], entry)) return false;
        out(static_cast<Index>(k)) = entry;
    }
    return true;
}

bool parse_cmatrix(const json& j, Matrix& out) {
    if (!j.is_array() || j.empty()) return false;
    const std::size_t rows = j.size();
    std::size_t cols = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].empty()) return false;
        if (r == 0) {
            cols = j[r].size();
            out.resize(static_cast<Index>(rows), static_cast<Index>(cols));
        } else if (j[r].size() != cols) {
            return false;
        }
        for (std::size_t c = 0; c < cols; ++c) {
            Complex entry;
            if (!parse_complex(j[r][c], entry)) return false;
            out(static_cast<Index>(r), static_cast<Index>(c)) = entry;
        }
    }
    return true;
}

// Finite and strictly increasing, at least one entry.
bool parse_times(const json& j, std::vector<double>& out) {
    if (!j.is_array() || j.empty()) return false;
    out.clear();
    out.reserve(j.size());
    for (std::size_t k = 0; k < j.size(); ++k) {
        double t = 0.0;
        if (!get_finite(j[k], t)) return false;
        if (!out.empty() && t <= out.back()) return false;
        out.push_back(t);
    }
    return true;
}

// Optional positive tolerance field with a default.
double positive_field(const json& obj, const char* key, double fallback,
                      const std::string& where, Violations& out) {
    if (!obj.contains(key)) return fallback;
    double value = 0.0;
    if (!get_finite(obj[key], value) || value <= 0.0) {
        out.add(where + "." + key + ": must be a positive finite number");
        return fallback;
    }
    return value;
}

// Required integer field within [lo, hi].
std::optional<long long> int_field(const json& obj, const char* key, long long lo,
                                   long long hi, const std::string& where,
                                   Violations& out) {
    std::ostringstream need;
    need << where << "." << key << ": required integer in [" << lo << ", " << hi << "]";
    if (!obj.contains(key)) {
        out.add(need.str());
        return std::nullopt;
    }
    long long value = 0;
    if (!get_int(obj[key], value) || value < lo || value > hi) {
        out.add(need.str());
        return std::nullopt;
    }
    return value;
}

// ---- per-kind configurations ----------------------------------------------

struct EnvironmentSpec {
    Index system_dim = 0;
    int n_env = 0;
    double theta = 0.0;
    bool functional = true;
};

struct HistorySpec {
    std::vector<double> times;
    Vector state;
    std::vector<std::vector<Matrix>> sets;
};

struct DecoherenceJob {
    std::optional<EnvironmentSpec> environment;
    std::optional<HistorySpec> history;
    double epsilon = default_decoherence_epsilon;
};

struct MaxentJob {
    Index dim = 0;
    std::vector<Matrix> operators;
    std::vector<double> targets;
    double tol = 1e-10;
};

struct SecondLawJob {
    int sites = 0;
    double exchange = 1.0;
    double field = 0.0;
    int cell_size = 1;
    std::vector<int> bits;
    std::vector<double> times;
    double epsilon = 1e-10;
};

struct EhrenfestJob {
    Index grid = 0;
    double x_min = 0.0;
    double x_max = 0.0;
    double mass = 1.0;
    enum class Potential { free, harmonic, quartic } potential = Potential::free;
    double strength = 1.0;  // spring constant or quartic coefficient
    double x0 = 0.0;
    double p0 = 0.0;
    double width = 0.0;
    std::vector<double> times;
};

struct SearchJob {
    Index dim = 0;
    int n_times = 0;
    int trials = 0;
    int injected = 0;
};

struct CertaintyJob {
    bool spectral = false;
    Index dim = 0;
    std::vector<double> times;
    double tol = 1e-9;
};

struct ParsedConfig {
    std::string kind;
    std::uint64_t seed = 0;
    std::filesystem::path output;
    std::optional<DecoherenceJob> decoherence;
    std::optional<MaxentJob> maxent;
    std::optional<SecondLawJob> second_law;
    std::optional<EhrenfestJob> ehrenfest;
    std::optional<SearchJob> search;
    std::optional<CertaintyJob> certainty;
};

// ---- per-kind parsing ------------------------------------------------------

std::optional<HistorySpec> parse_history(const json& obj, Violations& out) {
    if (!obj.is_object()) {
        out.add("history: must be an object with times, state, sets");
        return std::nullopt;
    }
    check_keys(obj, {"times", "state", "sets"}, "history", out);
    HistorySpec spec;
    bool ok = true;

    if (!obj.contains("times") || !parse_times(obj["times"], spec.times)) {
        out.add("history.times: required array of finite, strictly increasing numbers");
        ok = false;
    }
    if (!obj.contains("state") || !parse_cvector(obj["state"], spec.state)) {
        out.add("history.state: required array of numbers or [re, im] pairs");
        ok = false;
    } else if (std::abs(spec.state.norm() - 1.0) > tol_norm) {
        out.add("history.state: must be unit norm");
        ok = false;
    }

    if (!obj.contains("sets") || !obj["sets"].is_array() || obj["sets"].empty()) {
        out.add("history.sets: required array with one projector list per time");
        return std::nullopt;
    }
    const json& sets = obj["sets"];
    if (ok && sets.size() != spec.times.size()) {
        out.add("history.sets: needs exactly one projector list per time");
        ok = false;
    }
    const Index dim = spec.state.size();
    for (std::size_t k = 0; k < sets.size(); ++k) {
        const std::string where = "history.sets[" + std::to_string(k) + "]";
        if (!sets[k].is_array() || sets[k].empty()) {
            out.add(where + ": must be a non-empty array of matrices");
            ok = false;
            continue;
        }
        std::vector<Matrix> members;
        bool level_ok = true;
        for (std::size_t p = 0; p < sets[k].size(); ++p) {
            Matrix m;
            if (!parse_cmatrix(sets[k][p], m) || m.rows() != m.cols()) {
                out.add(where + ": entry " + std::to_string(p) +
                        " is not a square complex matrix");
                level_ok = false;
                continue;
            }
            if (dim > 0 && m.rows() != dim) {
                out.add(where + ": entry " + std::to_string(p) +
                        " does not match the state dimension");
                level_ok = false;
                continue;
            }
            if (max_abs(m - m.adjoint()) > tol_proj ||
                max_abs(m * m - m) > tol_proj) {
                out.add(where + ": entry " + std::to_string(p) +
                        " is not a projector (Hermitian and idempotent)");
                level_ok = false;
                continue;
            }
            members.push_back(std::move(m));
        }
        if (level_ok && !members.empty()) {
            Matrix sum = Matrix::Zero(members.front().rows(), members.front().cols());
            for (const Matrix& m : members) sum += m;
            if (max_abs(sum - Matrix::Identity(sum.rows(), sum.cols())) > tol_proj) {
                out.add(where + ": projectors do not sum to the identity");
                level_ok = false;
            }
        }
        ok = ok && level_ok;
        spec.sets.push_back(std::move(members));
    }
    return ok ? std::optional<HistorySpec>(std::move(spec)) : std::nullopt;
}

void parse_decoherence(const json& root, ParsedConfig& cfg, Violations& out) {
    check_keys(root, {"kind", "seed", "output", "epsilon", "environment", "history"},
               "config", out);
    DecoherenceJob job;
    job.epsilon = positive_field(root, "epsilon", default_decoherence_epsilon, "config", out);

    const bool has_env = root.contains("environment");
    const bool has_hist = root.contains("history");
    if (has_env == has_hist) {
        out.add("config: exactly one of 'environment' or 'history' is required");
        return;
    }
    if (has_env) {
        const json& env = root["environment"];
        if (!env.is_object()) {
            out.add("environment: must be an object");
            return;
        }
        check_keys(env, {"system_dim", "n_env", "theta", "functional"}, "environment", out);
        EnvironmentSpec spec;
        bool ok = true;
        if (const auto v = int_field(env, "system_dim", 2, 1 << 12, "environment", out))
            spec.system_dim = static_cast<Index>(*v);
        else
            ok = false;
        if (const auto v = int_field(env, "n_env", 0, 1 << 20, "environment", out))
            spec.n_env = static_cast<int>(*v);
        else
            ok = false;
        if (!env.contains("theta") || !get_finite(env["theta"], spec.theta)) {
            out.add("environment.theta: required finite number");
            ok = false;
        }
        if (env.contains("functional")) {
            if (!env["functional"].is_boolean()) {
                out.add("environment.functional: must be a boolean");
                ok = false;
            } else {
                spec.functional = env["functional"].get<bool>();
            }
        }
        if (ok) job.environment = spec;
    } else {
        if (auto spec = parse_history(root["history"], out)) job.history = std::move(*spec);
    }
    if ((job.environment || job.history) && out.ok()) cfg.decoherence = std::move(job);
}

Matrix named_operator(const std::string& name, bool& known) {
    known = true;
    Matrix m(2, 2);
    if (name == "sigma_x") {
        m << Complex(0, 0), Complex(1, 0), Complex(1, 0), Complex(0, 0);
    } else if (name == "sigma_y") {
        m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
    } else if (name == "sigma_z") {
        m << Complex(1, 0), Complex(0, 0), Complex(0, 0), Complex(-1, 0);
    } else {
        known = false;
    }
    return m;
}

void parse_maxent(const json& root, ParsedConfig& cfg, Violations& out) {
    check_keys(root, {"kind", "seed", "output", "dim", "constraints", "tol"}, "config", out);
    MaxentJob job;
    job.tol = positive_field(root, "tol", 1e-10, "config", out);
    bool ok = true;
    if (const auto v = int_field(root, "dim", 2, max_dim, "config", out))
        job.dim = static_cast<Index>(*v);
    else
        ok = false;

    if (!root.contains("constraints") || !root["constraints"].is_array() ||
        root["constraints"].empty()) {
        out.add("constraints: required non-empty array of {operator, target}");
        return;
    }
    const json& constraints = root["constraints"];
    for (std::size_t k = 0; k < constraints.size(); ++k) {
        const std::string where = "constraints[" + std::to_string(k) + "]";
        const json& c = constraints[k];
        if (!c.is_object()) {
            out.add(where + ": must be an object with operator and target");
            ok = false;
            continue;
        }
        check_keys(c, {"operator", "target"}, where, out);
        double target = 0.0;
        if (!c.contains("target") || !get_finite(c["target"], target)) {
            out.add(where + ".target: required finite number");
            ok = false;
        }
        Matrix op;
        if (!c.contains("operator")) {
            out.add(where + ".operator: required (a named operator or a matrix)");
            ok = false;
        } else if (c["operator"].is_string()) {
            bool known = false;
            op = named_operator(c["operator"].get<std::string>(), known);
            if (!known) {
                out.add(where + ".operator: unknown name (use sigma_x, sigma_y, sigma_z "
                        "or an explicit matrix)");
                ok = false;
            } else if (job.dim != 0 && job.dim != 2) {
                out.add(where + ".operator: named operators need dim = 2");
                ok = false;
            }
        } else if (!parse_cmatrix(c["operator"], op) || op.rows() != op.cols()) {
            out.add(where + ".operator: not a square complex matrix");
            ok = false;
        } else if (job.dim != 0 && op.rows() != job.dim) {
            out.add(where + ".operator: does not match dim");
            ok = false;
        }
        if (op.size() > 0 && max_abs(op - op.adjoint()) > tol_herm) {
            out.add(where + ".operator: must be Hermitian");
            ok = false;
        }
        if (ok) {
            job.operators.push_back(std::move(op));
            job.targets.push_back(target);
        }
    }
    if (ok && out.ok()) cfg.maxent = std::move(job);
}

void parse_second_law(const json& root, ParsedConfig& cfg, Violations& out) {
    check_keys(root,
               {"kind", "seed", "output", "sites", "exchange", "field", "cell_size",
                "initial", "times", "epsilon"},
               "config", out);
    SecondLawJob job;
    bool ok = true;
    if (const auto v = int_field(root, "sites", 1, 64, "config", out))
        job.sites = static_cast<int>(*v);
    else
        ok = false;
    if (const auto v = int_field(root, "cell_size", 1, 64, "config", out))
        job.cell_size = static_cast<int>(*v);
    else
        ok = false;
    if (ok && job.sites % job.cell_size != 0) {
        out.add("cell_size: must divide sites");
        ok = false;
    }
    if (root.contains("exchange") && !get_finite(root["exchange"], job.exchange)) {
        out.add("exchange: must be a finite number");
        ok = false;
    }
    if (root.contains("field") && !get_finite(root["field"], job.field)) {
        out.add("field: must be a finite number");
        ok = false;
    }
    job.epsilon = positive_field(root, "epsilon", 1e-10, "config", out);

    if (!root.contains("initial") || !root["initial"].is_string()) {
        out.add("initial: required string of '0'/'1' site occupations");
        ok = false;
    } else {
        const std::string bits = root["initial"].get<std::string>();
        if (job.sites > 0 && bits.size() != static_cast<std::size_t>(job.sites)) {
            out.add("initial: needs exactly one character per site");
            ok = false;
        }
        for (char c : bits) {
            if (c != '0' && c != '1') {
                out.add("initial: characters must be '0' or '1'");
                ok = false;
                break;
            }
            job.bits.push_back(c - '0');
        }
    }
    if (!root.contains("times") || !parse_times(root["times"], job.times)) {
        out.add("times: required array of finite, strictly increasing numbers");
        ok = false;
    }
    if (ok && out.ok()) cfg.second_law = std::move(job);
}

void parse_ehrenfest(const json& root, ParsedConfig& cfg, Violations& out) {
    check_keys(root,
               {"kind", "seed", "output", "grid", "x_min", "x_max", "mass", "potential",
                "packet", "times"},
               "config", out);
    EhrenfestJob job;
    bool ok = true;
    if (const auto v = int_field(root, "grid", 8, 1 << 12, "config", out))
        job.grid = static_cast<Index>(*v);
    else
        ok = false;
    if (!root.contains("x_min") || !get_finite(root["x_min"], job.x_min) ||
        !root.contains("x_max") || !get_finite(root["x_max"], job.x_max) ||
        job.x_min >= job.x_max) {
        out.add("x_min/x_max: required finite numbers with x_min < x_max");
        ok = false;
    }
    job.mass = positive_field(root, "mass", 1.0, "config", out);

    if (!root.contains("potential") || !root["potential"].is_object() ||
        !root["potential"].contains("type") || !root["potential"]["type"].is_string()) {
        out.add("potential: required object with a 'type' of free, harmonic or quartic");
        ok = false;
    } else {
        const json& pot = root["potential"];
        const std::string type = pot["type"].get<std::string>();
        if (type == "free") {
            check_keys(pot, {"type"}, "potential", out);
            job.potential = EhrenfestJob::Potential::free;
        } else if (type == "harmonic") {
            check_keys(pot, {"type", "spring"}, "potential", out);
            job.potential = EhrenfestJob::Potential::harmonic;
            job.strength = positive_field(pot, "spring", 1.0, "potential", out);
        } else if (type == "quartic") {
            check_keys(pot, {"type", "coefficient"}, "potential", out);
            job.potential = EhrenfestJob::Potential::quartic;
            job.strength = positive_field(pot, "coefficient", 0.25, "potential", out);
        } else {
            out.add("potential.type: unknown type (use free, harmonic or quartic)");
            ok = false;
        }
    }

    if (!root.contains("packet") || !root["packet"].is_object()) {
        out.add("packet: required object with x0, p0, width");
        ok = false;
    } else {
        const json& packet = root["packet"];
        check_keys(packet, {"x0", "p0", "width"}, "packet", out);
        if (!packet.contains("x0") || !get_finite(packet["x0"], job.x0)) {
            out.add("packet.x0: required finite number");
            ok = false;
        }
        if (!packet.contains("p0") || !get_finite(packet["p0"], job.p0)) {
            out.add("packet.p0: required finite number");
            ok = false;
        }
        if (!packet.contains("width") || !get_finite(packet["width"], job.width) ||
            job.width <= 0.0) {
            out.add("packet.width: required positive finite number");
            ok = false;
        }
    }
    if (!root.contains("times") || !parse_times(root["times"], job.times) ||
        (ok && !job.times.empty() && job.times.front() < 0.0)) {
        out.add("times: required array of finite, strictly increasing, nonnegative numbers");
        ok = false;
    }
    if (ok && out.ok()) cfg.ehrenfest = std::move(job);
}

void parse_search(const json& root, ParsedConfig& cfg, Violations& out) {
    check_keys(root, {"kind", "seed", "output", "dim", "n_times", "trials", "injected_trivial"},
               "config", out);
    SearchJob job;
    bool ok = true;
    if (const auto v = int_field(root, "dim", 2, hist_max_dim, "config", out))
        job.dim = static_cast<Index>(*v);
    else
        ok = false;
    if (const auto v = int_field(root, "n_times", 1, 32, "config", out))
        job.n_times = static_cast<int>(*v);
    else
        ok = false;
    if (const auto v = int_field(root, "trials", 1, 1 << 20, "config", out))
        job.trials = static_cast<int>(*v);
    else
        ok = false;
    if (root.contains("injected_trivial")) {
        if (const auto v = int_field(root, "injected_trivial", 0, 1 << 20, "config", out))
            job.injected = static_cast<int>(*v);
        else
            ok = false;
        if (ok && job.injected > job.trials) {
            out.add("injected_trivial: must not exceed trials");
            ok = false;
        }
    }
    if (ok && out.ok()) cfg.search = std::move(job);
}

void parse_certainty(const json& root, ParsedConfig& cfg, Violations& out) {
    check_keys(root, {"kind", "seed", "output", "construction", "dim", "times", "tol"},
               "config", out);
    CertaintyJob job;
    bool ok = true;
    if (!root.contains("construction") || !root["construction"].is_string()) {
        out.add("construction: required string, 'state-question' or 'spectral'");
        ok = false;
    } else {
        const std::string c = root["construction"].get<std::string>();
        if (c == "state-question") {
            job.spectral = false;
        } else if (c == "spectral") {
            job.spectral = true;
        } else {
            out.add("construction: unknown value (use 'state-question' or 'spectral')");
            ok = false;
        }
    }
    if (const auto v = int_field(root, "dim", 2, hist_max_dim, "config", out))
        job.dim = static_cast<Index>(*v);
    else
        ok = false;
    if (!root.contains("times") || !parse_times(root["times"], job.times)) {
        out.add("times: required array of finite, strictly increasing numbers");
        ok = false;
    }
    job.tol = positive_field(root, "tol", 1e-9, "config", out);
    if (ok && out.ok()) cfg.certainty = std::move(job);
}

std::optional<ParsedConfig> parse_config(const std::string& text, Violations& out) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& err) {
        out.add(std::string("config: not valid JSON: ") + err.what());
        return std::nullopt;
    }
    if (!root.is_object()) {
        out.add("config: the top level must be a JSON object");
        return std::nullopt;
    }

    ParsedConfig cfg;
    if (!root.contains("kind") || !root["kind"].is_string()) {
        out.add(std::string("kind: required string, one of ") + known_kinds);
    } else {
        cfg.kind = root["kind"].get<std::string>();
    }
    if (root.contains("seed")) {
        if (!root["seed"].is_number_unsigned())
            out.add("seed: must be a nonnegative integer");
        else
            cfg.seed = root["seed"].get<std::uint64_t>();
    }
    if (!root.contains("output") || !root["output"].is_string() ||
        root["output"].get<std::string>().empty()) {
        out.add("output: required non-empty relative file name");
    } else {
        const std::filesystem::path p(root["output"].get<std::string>());
        bool escapes = p.is_absolute();
        for (const auto& part : p)
            if (part == "..") escapes = true;
        if (escapes)
            out.add("output: must be a relative path without '..'");
        else
            cfg.output = p;
    }

    if (cfg.kind == "decoherence") parse_decoherence(root, cfg, out);
    else if (cfg.kind == "maxent") parse_maxent(root, cfg, out);
    else if (cfg.kind == "second-law") parse_second_law(root, cfg, out);
    else if (cfg.kind == "ehrenfest") parse_ehrenfest(root, cfg, out);
    else if (cfg.kind == "theorem-search") parse_search(root, cfg, out);
    else if (cfg.kind == "certainty") parse_certainty(root, cfg, out);
    else if (!cfg.kind.empty())
        out.add("kind: unknown kind '" + cfg.kind + "', one of " + known_kinds);

    if (!out.ok()) return std::nullopt;
    return cfg;
}

// ---- execution -------------------------------------------------------------

json label_json(const HistoryLabel& label) {
    json arr = json::array();
    for (Index a : label) arr.push_back(static_cast<std::int64_t>(a));
    return arr;
}

void report_json(const DecoherenceReport& report, json& doc) {
    doc["defect"] = report.defect;
    doc["decoherent"] = report.decoherent;
    doc["epsilon"] = report.epsilon;
    json probs = json::array();
    for (Index k = 0; k < report.probabilities.size(); ++k)
        probs.push_back(report.probabilities(k));
    doc["probabilities"] = probs;
    json labels = json::array();
    for (const HistoryLabel& label : report.labels) labels.push_back(label_json(label));
    doc["labels"] = labels;
}

std::string run_decoherence(const DecoherenceJob& job) {
    json doc;
    doc["kind"] = "decoherence";
    if (job.environment) {
        const EnvironmentSpec& env = *job.environment;
        doc["prediction"] =
            environment_defect_prediction(env.system_dim, env.n_env, env.theta);
        if (env.functional) {
            const EnvironmentDecoherence model = environment_decoherence_model(
                env.system_dim, env.n_env, env.theta, job.epsilon);
            report_json(model.report, doc);
        }
    } else {
        const HistorySpec& spec = *job.history;
        std::vector<std::shared_ptr<const ProjectorSet>> sets;
        sets.reserve(spec.sets.size());
        for (const std::vector<Matrix>& level : spec.sets) {
            std::vector<Projector> members;
            members.reserve(level.size());
            for (const Matrix& m : level) members.emplace_back(m);
            sets.push_back(std::make_shared<const ProjectorSet>(std::move(members)));
        }
        const HistorySet set = HistorySet::product(spec.times, std::move(sets));
        const DecoherenceReport report = decoherence_functional(
            set, DensityMatrix::pure(StateVector{spec.state}), job.epsilon);
        report_json(report, doc);
    }
    return doc.dump(2) + "\n";
}

std::string run_maxent(const MaxentJob& job) {
    std::vector<HermitianOperator> operators;
    operators.reserve(job.operators.size());
    for (const Matrix& m : job.operators) operators.emplace_back(m);
    RealVector targets(static_cast<Index>(job.targets.size()));
    for (std::size_t k = 0; k < job.targets.size(); ++k)
        targets(static_cast<Index>(k)) = job.targets[k];

    MaxEntOptions opts;
    opts.tol = job.tol;
    const MaxEntSolution solution =
        solve_multipliers(ConstraintSet{std::move(operators), std::move(targets)}, opts);

    json doc;
    doc["kind"] = "maxent";
    json lambdas = json::array();
    for (Index k = 0; k < solution.multipliers.size(); ++k)
        lambdas.push_back(solution.multipliers(k));
    doc["multipliers"] = lambdas;
    doc["entropy"] = solution.entropy;
    doc["log_partition"] = solution.partition_log;
    doc["residual"] = solution.residual;
    doc["iterations"] = solution.iterations;
    return doc.dump(2) + "\n";
}

std::string run_second_law(const SecondLawJob& job, int threads) {
    const SpinChainModel model(job.sites, job.exchange, job.field);
    const CellPartition partition(model, job.cell_size);
    const StateVector psi0 = model.basis_product_state(job.bits);
    const std::vector<SecondLawRow> rows =
        second_law_experiment(partition, psi0, job.times, job.epsilon, threads);

    std::string csv = "t,S_local,S_eq,defect\n";
    for (const SecondLawRow& row : rows)
        csv += serialize::csv_row(
            {row.t, row.entropy_local, row.entropy_equilibrium, row.defect});
    return csv;
}

std::string run_ehrenfest(const EhrenfestJob& job) {
    std::function<double(double)> potential;
    switch (job.potential) {
        case EhrenfestJob::Potential::free:
            potential = [](double) { return 0.0; };
            break;
        case EhrenfestJob::Potential::harmonic:
            potential = [k = job.strength](double x) { return 0.5 * k * x * x; };
            break;
        case EhrenfestJob::Potential::quartic:
            potential = [c = job.strength](double x) { return c * x * x * x * x; };
            break;
    }
    const WavePacketModel model(job.grid, job.x_min, job.x_max, job.mass,
                                std::move(potential));
    const std::vector<EhrenfestRow> rows =
        ehrenfest_experiment(model, job.x0, job.p0, job.width, job.times);

    std::string csv = "t,x_mean,x_classical,spread\n";
    for (const EhrenfestRow& row : rows)
        csv += serialize::csv_row({row.t, row.x_mean, row.x_classical, row.spread});
    return csv;
}

std::string run_search(const SearchJob& job, std::uint64_t seed, int threads) {
    const FineGrainedSearch survey = search_fine_grained(
        job.dim, job.n_times, job.trials, seed, job.injected, threads);

    json doc;
    doc["kind"] = "theorem-search";
    doc["seed"] = survey.seed;
    doc["dim"] = static_cast<std::int64_t>(survey.dim);
    doc["n_times"] = survey.n_times;
    doc["trials"] = survey.trials;
    doc["non_decoherent"] = survey.non_decoherent;
    doc["trivial"] = survey.trivial;
    if (std::isfinite(survey.min_defect))
        doc["min_defect"] = survey.min_defect;
    else
        doc["min_defect"] = nullptr;
    json kinds = json::array();
    for (TrivialityVerdict::Kind kind : survey.classifications)
        kinds.push_back(kind_name(kind));
    doc["classifications"] = kinds;
    json witnesses = json::array();
    for (const TrivialityVerdict& verdict : survey.witnesses) {
        json w;
        w["classification"] = kind_name(verdict.classification);
        w["max_overlap"] = verdict.max_overlap;
        w["witness_left"] = label_json(verdict.witness_left);
        w["witness_right"] = label_json(verdict.witness_right);
        json priors = json::array();
        for (const HistoryLabel& label : verdict.final_to_prior)
            priors.push_back(label_json(label));
        w["final_to_prior"] = priors;
        witnesses.push_back(w);
    }
    doc["witnesses"] = witnesses;
    return doc.dump(2) + "\n";
}

std::string run_certainty(const CertaintyJob& job, std::uint64_t seed) {
    rng::Engine eng = rng::engine_for(seed, 0);
    CertaintyReport report;
    if (!job.spectral) {
        const StateVector psi{rng::haar_vector(job.dim, eng)};
        const auto question = std::make_shared<const ProjectorSet>(
            ProjectorSet::binary(Projector::onto(psi)));
        const HistorySet set = HistorySet::product(
            job.times,
            std::vector<std::shared_ptr<const ProjectorSet>>(job.times.size(), question));
        report = certainty_check(set, psi, job.tol);
    } else {
        const Matrix u = rng::haar_unitary(job.dim, eng);
        RealVector evals(job.dim);
        for (Index k = 0; k < job.dim; ++k) evals(k) = static_cast<double>(k);
        const HermitianOperator h(u * evals.cast<Complex>().asDiagonal() * u.adjoint());
        const ProjectorSet spectral = ProjectorSet::eigenspaces(h);
        const StateVector psi{spectral_decompose(h).eigenvectors.col(job.dim / 2)};
        report = certainty_check(narrative_set(spectral, h, job.times), psi, job.tol);
    }

    json doc;
    doc["kind"] = "certainty";
    doc["construction"] = job.spectral ? "spectral" : "state-question";
    doc["decoherent"] = report.decoherent;
    doc["certain"] = report.certain;
    doc["vacuous"] = report.vacuous;
    doc["verified"] = report.verified;
    doc["notice"] = report.notice;
    doc["defect"] = report.defect;
    doc["max_probability"] = report.max_probability;
    doc["max_violation"] = report.max_violation;
    doc["certain_label"] = label_json(report.certain_label);
    return doc.dump(2) + "\n";
}

bool read_file(const std::filesystem::path& path, std::string& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::ostringstream buffer;
    buffer << in.rdbuf();
    out = buffer.str();
    return static_cast<bool>(in) || in.eof();
}

} // namespace

ValidationReport validate_config(const std::string& config_text) {
    Violations v;
    parse_config(config_text, v);
    return ValidationReport{std::move(v.list)};
}

ValidationReport validate_config_file(const std::filesystem::path& path) {
    std::string text;
    if (!read_file(path, text))
        return ValidationReport{{"config: could not read file " + path.string()}};
    return validate_config(text);
}

RunOutcome run_config_file(const std::filesystem::path& path,
                           const std::filesystem::path& out_dir, int threads) {
    RunOutcome outcome;
    std::string text;
    if (!read_file(path, text)) {
        outcome.exit_code = exit_config_error;
        outcome.message = "config: could not read file " + path.string();
        return outcome;
    }
    Violations violations;
    const std::optional<ParsedConfig> cfg = parse_config(text, violations);
    if (!cfg) {
        outcome.exit_code = exit_config_error;
        std::string joined;
        for (const std::string& v : violations.list) {
            if (!joined.empty()) joined += '\n';
            joined += v;
        }
        outcome.message = joined;
        return outcome;
    }
    if (threads < 1) threads = 1;

    try {
        std::string content;
        if (cfg->decoherence) content = run_decoherence(*cfg->decoherence);
        else if (cfg->maxent) content = run_maxent(*cfg->maxent);
        else if (cfg->second_law) content = run_second_law(*cfg->second_law, threads);
        else if (cfg->ehrenfest) content = run_ehrenfest(*cfg->ehrenfest);
        else if (cfg->search) content = run_search(*cfg->search, cfg->seed, threads);
        else if (cfg->certainty) content = run_certainty(*cfg->certainty, cfg->seed);
        else {
            outcome.exit_code = exit_config_error;
            outcome.message = "config: nothing to run";
            return outcome;
        }

        const std::filesystem::path resolved = out_dir / cfg->output;
        serialize::atomic_write(resolved, content);
        outcome.outputs.push_back(resolved.string());
        outcome.message = "wrote " + resolved.string();
    } catch (const contract_violation& err) {
        outcome.exit_code = exit_config_error;
        outcome.message = err.what();
    } catch (const cap_exceeded& err) {
        outcome.exit_code = exit_cap;
        outcome.message = err.what();
    } catch (const numerical_failure& err) {
        outcome.exit_code = exit_numerical;
        outcome.message = err.what();
    } catch (const std::exception& err) {
        outcome.exit_code = exit_numerical;
        outcome.message = err.what();
    }
    return outcome;
}

} // namespace decohist
