#include "turnpike/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "turnpike/io.hpp"

namespace turnpike {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(path + ": " + msg);
}

void reject_unknown(const json& obj, const std::string& path,
                    const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            fail(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
}

const json* find(const json& obj, const std::string& key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double get_number(const json& obj, const std::string& path, const std::string& key,
                  bool required, double fallback) {
    const json* v = find(obj, key);
    if (!v) {
        if (required) fail(path + "." + key, "missing required value");
        return fallback;
    }
    if (!v->is_number()) fail(path + "." + key, "must be a number");
    return v->get<double>();
}

int get_int(const json& obj, const std::string& path, const std::string& key,
            bool required, int fallback) {
    const json* v = find(obj, key);
    if (!v) {
        if (required) fail(path + "." + key, "missing required value");
        return fallback;
    }
    if (!v->is_number_integer()) fail(path + "." + key, "must be an integer");
    return v->get<int>();
}

bool get_bool(const json& obj, const std::string& path, const std::string& key,
              bool fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(path + "." + key, "must be a boolean");
    return v->get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const std::string& key,
                       bool required, const std::string& fallback) {
    const json* v = find(obj, key);
    if (!v) {
        if (required) fail(path + "." + key, "missing required value");
        return fallback;
    }
    if (!v->is_string()) fail(path + "." + key, "must be a string");
    return v->get<std::string>();
}

Vector parse_vector(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "must be a non-empty array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) fail(path, "must contain only numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    if (!v.allFinite()) fail(path, "entries must be finite");
    return v;
}

Matrix parse_matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "must be a non-empty array of rows");
    std::size_t cols = 0;
    Matrix M;
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].empty())
            fail(path, "row " + std::to_string(r) + " must be a non-empty array");
        if (r == 0) {
            cols = j[r].size();
            M.resize(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
        } else if (j[r].size() != cols) {
            fail(path, "rows have different lengths");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number()) fail(path, "entries must be numbers");
            M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                j[r][c].get<double>();
        }
    }
    if (!M.allFinite()) fail(path, "entries must be finite");
    return M;
}

ParameterSample parse_sample(const json& j, const std::string& path, bool with_weight) {
    if (!j.is_object()) fail(path, "must be an object");
    std::set<std::string> allowed{"A", "B", "C"};
    if (with_weight) allowed.insert("weight");
    reject_unknown(j, path, allowed);
    ParameterSample s;
    if (with_weight) {
        s.weight = get_number(j, path, "weight", true, 0.0);
    }
    const json* A = find(j, "A");
    const json* B = find(j, "B");
    const json* C = find(j, "C");
    if (!A || !B || !C) fail(path, "needs matrices A, B and C");
    s.A = parse_matrix(*A, path + ".A");
    s.B = parse_matrix(*B, path + ".B");
    s.C = parse_matrix(*C, path + ".C");
    return s;
}

EnsembleConfig parse_ensemble(const json& j, const std::string& path) {
    EnsembleConfig out;
    if (!j.is_object()) fail(path, "must be an object");
    if (find(j, "file")) {
        reject_unknown(j, path, {"file"});
        out.from_file = true;
        out.file = get_string(j, path, "file", true, "");
        return out;
    }
    const std::string kind = get_string(j, path, "kind", true, "");
    if (kind == "explicit") {
        reject_unknown(j, path, {"kind", "samples"});
        const json* samples = find(j, "samples");
        if (!samples || !samples->is_array() || samples->empty())
            fail(path + ".samples", "must be a non-empty array");
        out.spec.kind = DistributionKind::Explicit;
        for (std::size_t i = 0; i < samples->size(); ++i)
            out.spec.samples.push_back(parse_sample(
                (*samples)[i], path + ".samples[" + std::to_string(i) + "]", true));
    } else if (kind == "poisson-scaled") {
        reject_unknown(j, path, {"kind", "A0", "B0", "C0", "lambda", "sample_count", "seed"});
        out.spec.kind = DistributionKind::PoissonScaled;
        const json* A0 = find(j, "A0");
        const json* B0 = find(j, "B0");
        const json* C0 = find(j, "C0");
        if (!A0 || !B0 || !C0) fail(path, "poisson-scaled needs A0, B0 and C0");
        out.spec.A0 = parse_matrix(*A0, path + ".A0");
        out.spec.B0 = parse_matrix(*B0, path + ".B0");
        out.spec.C0 = parse_matrix(*C0, path + ".C0");
        out.spec.lambda = get_number(j, path, "lambda", false, 5.0);
        if (!(out.spec.lambda > 0.0) || out.spec.lambda > 50.0)
            fail(path + ".lambda", "must lie in (0, 50]");
        out.spec.sample_count = get_int(j, path, "sample_count", false, 200);
        if (out.spec.sample_count < 1) fail(path + ".sample_count", "must be >= 1");
        const json* seed = find(j, "seed");
        if (seed) {
            if (!seed->is_number_unsigned() && !seed->is_number_integer())
                fail(path + ".seed", "must be a non-negative integer");
            out.spec.seed = seed->get<std::uint64_t>();
        } else {
            out.spec.seed = 42;
        }
    } else if (kind == "two-point") {
        reject_unknown(j, path, {"kind", "atoms", "masses"});
        out.spec.kind = DistributionKind::TwoPoint;
        const json* atoms = find(j, "atoms");
        const json* masses = find(j, "masses");
        if (!atoms || !atoms->is_array() || atoms->size() != 2)
            fail(path + ".atoms", "must be an array of exactly 2 atoms");
        if (!masses || !masses->is_array() || masses->size() != 2)
            fail(path + ".masses", "must be an array of exactly 2 masses");
        for (std::size_t i = 0; i < 2; ++i) {
            ParameterSample s = parse_sample((*atoms)[i],
                                             path + ".atoms[" + std::to_string(i) + "]",
                                             false);
            if (!(*masses)[i].is_number()) fail(path + ".masses", "must contain numbers");
            s.weight = (*masses)[i].get<double>();
            out.spec.atoms.push_back(std::move(s));
        }
        if (std::abs(out.spec.atoms[0].weight + out.spec.atoms[1].weight - 1.0) > 1e-12)
            fail(path + ".masses", "must sum to 1");
    } else {
        fail(path + ".kind", "must be one of explicit, poisson-scaled, two-point");
    }
    return out;
}

VectorSpec parse_vector_spec(const json& j, const std::string& path) {
    VectorSpec out;
    if (!j.is_object()) fail(path, "must be an object with constant, per_sample or file");
    reject_unknown(j, path, {"constant", "per_sample", "file"});
    const int given = (find(j, "constant") != nullptr) + (find(j, "per_sample") != nullptr) +
                      (find(j, "file") != nullptr);
    if (given != 1) fail(path, "give exactly one of constant, per_sample, file");
    if (const json* c = find(j, "constant")) {
        out.kind = VectorSpec::Kind::Constant;
        out.constant = parse_vector(*c, path + ".constant");
    } else if (const json* ps = find(j, "per_sample")) {
        out.kind = VectorSpec::Kind::PerSample;
        if (!ps->is_array() || ps->empty())
            fail(path + ".per_sample", "must be a non-empty array of vectors");
        for (std::size_t i = 0; i < ps->size(); ++i)
            out.per_sample.push_back(
                parse_vector((*ps)[i], path + ".per_sample[" + std::to_string(i) + "]"));
    } else {
        out.kind = VectorSpec::Kind::File;
        out.file = get_string(j, path, "file", true, "");
    }
    return out;
}

FeedbackSpec parse_gain(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "must be an object with constant or per_sample");
    reject_unknown(j, path, {"constant", "per_sample"});
    if (const json* c = find(j, "constant"))
        return FeedbackSpec::constant(parse_matrix(*c, path + ".constant"));
    if (const json* ps = find(j, "per_sample")) {
        if (!ps->is_array() || ps->empty())
            fail(path + ".per_sample", "must be a non-empty array of matrices");
        std::vector<Matrix> gains;
        for (std::size_t i = 0; i < ps->size(); ++i)
            gains.push_back(
                parse_matrix((*ps)[i], path + ".per_sample[" + std::to_string(i) + "]"));
        return FeedbackSpec::per_sample(std::move(gains));
    }
    fail(path, "give one of constant, per_sample");
}

std::vector<ScanRange> parse_scan(const json& j, const std::string& path) {
    const auto parse_one = [&](const json& r, const std::string& p) {
        if (!r.is_object()) fail(p, "must be an object {lo, hi, step}");
        reject_unknown(r, p, {"lo", "hi", "step"});
        ScanRange out;
        out.lo = get_number(r, p, "lo", false, -10.0);
        out.hi = get_number(r, p, "hi", false, 10.0);
        out.step = get_number(r, p, "step", false, 0.05);
        if (!(out.step > 0.0) || out.hi < out.lo) fail(p, "needs lo <= hi and step > 0");
        return out;
    };
    std::vector<ScanRange> ranges;
    if (j.is_array()) {
        if (j.empty()) fail(path, "must hold at least one range");
        for (std::size_t i = 0; i < j.size(); ++i)
            ranges.push_back(parse_one(j[i], path + "[" + std::to_string(i) + "]"));
    } else {
        ranges.push_back(parse_one(j, path));
    }
    return ranges;
}

const std::set<std::string> kCheckVariants{
    "A0",     "A1",        "A2-single",     "A2-double",      "complementary-C",
    "complementary-B", "coercivity-AC", "coercivity-AB", "average-decay"};

CheckItemConfig parse_check_item(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "must be an object");
    reject_unknown(j, path, {"variant", "gain", "scan", "alpha"});
    CheckItemConfig item;
    item.variant = get_string(j, path, "variant", true, "");
    if (!kCheckVariants.count(item.variant))
        fail(path + ".variant", "unknown check variant '" + item.variant + "'");
    if (const json* g = find(j, "gain")) item.gain = parse_gain(*g, path + ".gain");
    if (const json* s = find(j, "scan")) item.scan = parse_scan(*s, path + ".scan");
    item.alpha = get_number(j, path, "alpha", false, 0.0);

    const bool scannable =
        item.variant == "A0" || item.variant == "A1" || item.variant == "A2-single";
    if (item.scan && !scannable)
        fail(path + ".scan", "scans support only A0, A1 and A2-single");
    if (item.scan && item.gain) fail(path, "give either gain or scan, not both");
    const bool needs_gain = item.variant.rfind("coercivity", 0) != 0;
    if (needs_gain && !item.gain && !item.scan)
        fail(path, "variant '" + item.variant + "' needs a gain (or a scan)");
    if (item.variant == "average-decay" && !(item.alpha > 0.0))
        fail(path + ".alpha", "average-decay needs a positive alpha");
    return item;
}

} // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown(root, "",
                   {"ensemble", "problem", "solver", "outputs", "fit", "sweep", "check"});

    ExperimentConfig cfg;
    cfg.base_dir = path.parent_path();

    const json* ens = find(root, "ensemble");
    if (!ens) fail("ensemble", "missing required section");
    cfg.ensemble = parse_ensemble(*ens, "ensemble");

    if (const json* prob = find(root, "problem")) {
        if (!prob->is_object()) fail("problem", "must be an object");
        reject_unknown(*prob, "problem", {"T", "n_steps", "x0", "z", "phi_T", "scheme"});
        cfg.problem.present = true;
        cfg.problem.T = get_number(*prob, "problem", "T", true, 0.0);
        if (!(cfg.problem.T > 0.0)) fail("problem.T", "must be a positive number");
        cfg.problem.n_steps = get_int(*prob, "problem", "n_steps", true, 0);
        if (cfg.problem.n_steps < 2) fail("problem.n_steps", "must be an integer >= 2");
        const json* x0 = find(*prob, "x0");
        if (!x0) fail("problem.x0", "missing required value");
        cfg.problem.x0 = parse_vector_spec(*x0, "problem.x0");
        const json* z = find(*prob, "z");
        if (!z) fail("problem.z", "missing required value");
        cfg.problem.z = parse_vector(*z, "problem.z");
        if (const json* phi = find(*prob, "phi_T")) {
            cfg.problem.phi_T = parse_vector_spec(*phi, "problem.phi_T");
            cfg.problem.phi_T_given = true;
        }
        const std::string scheme =
            get_string(*prob, "problem", "scheme", false, "implicit-midpoint");
        if (scheme == "implicit-midpoint")
            cfg.problem.scheme = Scheme::ImplicitMidpoint;
        else if (scheme == "backward-euler")
            cfg.problem.scheme = Scheme::BackwardEuler;
        else
            fail("problem.scheme", "must be implicit-midpoint or backward-euler");
    }

    if (const json* solver = find(root, "solver")) {
        if (!solver->is_object()) fail("solver", "must be an object");
        reject_unknown(*solver, "solver", {"tol_rel_grad", "max_iters", "method"});
        cfg.solver.tol_rel_grad =
            get_number(*solver, "solver", "tol_rel_grad", false, 1e-8);
        if (!(cfg.solver.tol_rel_grad > 0.0))
            fail("solver.tol_rel_grad", "must be positive");
        cfg.solver.max_iters = get_int(*solver, "solver", "max_iters", false, 5000);
        if (cfg.solver.max_iters < 1) fail("solver.max_iters", "must be >= 1");
        const std::string method =
            get_string(*solver, "solver", "method", false, "bb-armijo");
        if (method == "bb-armijo")
            cfg.solver.method = SolveMethod::BbArmijo;
        else if (method == "cg")
            cfg.solver.method = SolveMethod::Cg;
        else
            fail("solver.method", "must be bb-armijo or cg");
    }

    if (const json* outputs = find(root, "outputs")) {
        if (!outputs->is_object()) fail("outputs", "must be an object");
        reject_unknown(*outputs, "outputs", {"dir", "plots", "gnuplot", "sample_indices"});
        cfg.outputs.dir = get_string(*outputs, "outputs", "dir", false, "out");
        cfg.outputs.plots = get_bool(*outputs, "outputs", "plots", true);
        cfg.outputs.gnuplot = get_bool(*outputs, "outputs", "gnuplot", false);
        if (const json* idx = find(*outputs, "sample_indices")) {
            if (!idx->is_array()) fail("outputs.sample_indices", "must be an array");
            for (const auto& v : *idx) {
                if (!v.is_number_integer() || v.get<int>() < 0)
                    fail("outputs.sample_indices", "must hold non-negative integers");
                cfg.outputs.sample_indices.push_back(v.get<int>());
            }
        }
    }

    if (const json* fit = find(root, "fit")) {
        if (!fit->is_object()) fail("fit", "must be an object");
        reject_unknown(*fit, "fit", {"window_lo", "window_hi"});
        cfg.fit.window_lo = get_number(*fit, "fit", "window_lo", false, 0.1);
        cfg.fit.window_hi = get_number(*fit, "fit", "window_hi", false, 0.5);
        if (!(cfg.fit.window_lo >= 0.0 && cfg.fit.window_hi <= 1.0 &&
              cfg.fit.window_lo < cfg.fit.window_hi))
            fail("fit.window_lo", "window must satisfy 0 <= lo < hi <= 1");
    }

    if (const json* sweep = find(root, "sweep")) {
        if (!sweep->is_object()) fail("sweep", "must be an object");
        reject_unknown(*sweep, "sweep", {"horizons", "steps_per_unit"});
        cfg.sweep.present = true;
        const json* horizons = find(*sweep, "horizons");
        if (!horizons || !horizons->is_array() || horizons->size() < 2)
            fail("sweep.horizons", "must be an array of at least 2 horizons");
        double prev = 0.0;
        for (const auto& v : *horizons) {
            if (!v.is_number()) fail("sweep.horizons", "must contain numbers");
            const double T = v.get<double>();
            if (!(T > prev)) fail("sweep.horizons", "must be positive and strictly increasing");
            cfg.sweep.horizons.push_back(T);
            prev = T;
        }
        cfg.sweep.steps_per_unit = get_int(*sweep, "sweep", "steps_per_unit", false, 15);
        if (cfg.sweep.steps_per_unit < 1) fail("sweep.steps_per_unit", "must be >= 1");
    }

    if (const json* check = find(root, "check")) {
        if (!check->is_object()) fail("check", "must be an object");
        reject_unknown(*check, "check", {"run"});
        const json* run = find(*check, "run");
        if (!run || !run->is_array() || run->empty())
            fail("check.run", "must be a non-empty array of checks");
        for (std::size_t i = 0; i < run->size(); ++i)
            cfg.checks.push_back(
                parse_check_item((*run)[i], "check.run[" + std::to_string(i) + "]"));
    }

    return cfg;
}

Ensemble resolve_ensemble(const ExperimentConfig& cfg,
                          std::optional<std::uint64_t> seed_override,
                          std::uint64_t* seed_used) {
    if (seed_used) *seed_used = 0;
    if (cfg.ensemble.from_file) {
        std::filesystem::path p = cfg.ensemble.file;
        if (p.is_relative()) p = cfg.base_dir / p;
        return read_ensemble_json(p);
    }
    DistributionSpec spec = cfg.ensemble.spec;
    if (seed_override && spec.kind == DistributionKind::PoissonScaled)
        spec.seed = *seed_override;
    if (seed_used && spec.kind == DistributionKind::PoissonScaled) *seed_used = spec.seed;
    return build_ensemble(spec);
}

std::vector<Vector> resolve_vector_spec(const VectorSpec& spec, const Ensemble& ens,
                                        const std::filesystem::path& base_dir,
                                        const std::string& field) {
    const std::size_t count = ens.samples.size();
    std::vector<Vector> out;
    switch (spec.kind) {
    case VectorSpec::Kind::Constant:
        if (spec.constant.size() != ens.n)
            throw ConfigError(field + ".constant: expected dimension " +
                              std::to_string(ens.n));
        out.assign(count, spec.constant);
        return out;
    case VectorSpec::Kind::PerSample:
        if (spec.per_sample.size() != count)
            throw ConfigError(field + ".per_sample: expected " + std::to_string(count) +
                              " vectors (one per sample)");
        for (const Vector& v : spec.per_sample)
            if (v.size() != ens.n)
                throw ConfigError(field + ".per_sample: expected dimension " +
                                  std::to_string(ens.n));
        return spec.per_sample;
    case VectorSpec::Kind::File: {
        std::filesystem::path p = spec.file;
        if (p.is_relative()) p = base_dir / p;
        std::ifstream in(p);
        if (!in) throw ConfigError(field + ".file: cannot open " + p.string());
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ConfigError(field + ".file: invalid JSON: " + std::string(e.what()));
        }
        if (!j.is_array() || j.size() != count)
            throw ConfigError(field + ".file: expected an array of " +
                              std::to_string(count) + " vectors");
        for (std::size_t i = 0; i < count; ++i) {
            Vector v = parse_vector(j[i], field + ".file[" + std::to_string(i) + "]");
            if (v.size() != ens.n)
                throw ConfigError(field + ".file: expected dimension " +
                                  std::to_string(ens.n));
            out.push_back(std::move(v));
        }
        return out;
    }
    }
    throw ConfigError(field + ": bad vector spec");
}

} // namespace turnpike
