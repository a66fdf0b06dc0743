#include "fedq/perturb.hpp"

#include <algorithm>
#include <cmath>

#include "fedq/errors.hpp"

namespace fedq {

NoiseSpec NoiseSpec::uniform(double alpha) {
    NoiseSpec s;
    s.family = NoiseFamily::Uniform;
    s.alpha = alpha;
    s.validate();
    return s;
}

NoiseSpec NoiseSpec::gaussian(double sigma) {
    NoiseSpec s;
    s.family = NoiseFamily::Gaussian;
    s.sigma = sigma;
    s.validate();
    return s;
}

void NoiseSpec::validate() const {
    if (family == NoiseFamily::Uniform) {
        if (alpha < 0.0) throw PolicySchemaMismatch("alpha must be >= 0");
    } else {
        if (sigma < 0.0) throw PolicySchemaMismatch("sigma must be >= 0");
    }
}

nlohmann::ordered_json NoiseSpec::to_json() const {
    nlohmann::ordered_json j;
    if (family == NoiseFamily::Uniform) {
        j["family"] = "uniform";
        j["alpha"] = alpha;
    } else {
        j["family"] = "gaussian";
        j["sigma"] = sigma;
    }
    return j;
}

NoiseSpec NoiseSpec::from_json(const nlohmann::json& j) {
    std::string family = j.at("family").get<std::string>();
    if (family == "uniform") {
        if (j.contains("sigma")) throw ConfigError("uniform spec must not carry sigma");
        return uniform(j.at("alpha").get<double>());
    }
    if (family == "gaussian") {
        if (j.contains("alpha")) throw ConfigError("gaussian spec must not carry alpha");
        return gaussian(j.at("sigma").get<double>());
    }
    throw ConfigError("unknown noise family '" + family + "'");
}

void PerturbationPolicy::validate(const Schema& schema) const {
    for (const auto& [name, spec] : noise) {
        auto idx = schema.index_of(name);
        if (!idx) throw PolicySchemaMismatch("perturbed column '" + name + "' not in schema");
        if (schema.at(*idx).kind != ColumnKind::Numeric) {
            throw PolicySchemaMismatch("perturbed column '" + name + "' is not numeric");
        }
        if (suppressed.count(name)) {
            throw PolicySchemaMismatch("column '" + name + "' is both perturbed and suppressed");
        }
        spec.validate();
    }
    for (const auto& name : suppressed) {
        if (!schema.index_of(name)) {
            throw PolicySchemaMismatch("suppressed column '" + name + "' not in schema");
        }
    }
}

PerturbationPolicy PerturbationPolicy::hospital_default(double alpha) {
    PerturbationPolicy p;
    p.noise["age"] = NoiseSpec::uniform(alpha);
    p.suppressed.insert("personid");
    return p;
}

nlohmann::ordered_json PerturbationPolicy::to_json() const {
    nlohmann::ordered_json j;
    nlohmann::ordered_json noise_j;
    for (const auto& [name, spec] : noise) noise_j[name] = spec.to_json();
    j["noise"] = noise_j;
    j["suppressed"] = suppressed;
    j["round_to_int"] = round_to_int;
    j["clamp_nonnegative"] = clamp_nonnegative;
    return j;
}

PerturbationPolicy PerturbationPolicy::from_json(const nlohmann::json& j) {
    PerturbationPolicy p;
    if (j.contains("noise")) {
        for (auto it = j.at("noise").begin(); it != j.at("noise").end(); ++it) {
            p.noise[it.key()] = NoiseSpec::from_json(it.value());
        }
    }
    if (j.contains("suppressed")) {
        for (const auto& s : j.at("suppressed")) p.suppressed.insert(s.get<std::string>());
    }
    p.round_to_int = j.value("round_to_int", false);
    p.clamp_nonnegative = j.value("clamp_nonnegative", false);
    return p;
}

double noise_variance(const NoiseSpec& spec) {
    spec.validate();
    if (spec.family == NoiseFamily::Uniform) return spec.alpha * spec.alpha / 3.0;
    return spec.sigma * spec.sigma;
}

double sample_noise(const NoiseSpec& spec, SeededRng& rng) {
    spec.validate();
    if (spec.family == NoiseFamily::Uniform) {
        if (spec.alpha == 0.0) return 0.0;
        return rng.uniform(-spec.alpha, spec.alpha);
    }
    return rng.gaussian(spec.sigma);
}

namespace {

struct PerturbPlan {
    Schema out_schema;
    std::vector<size_t> keep;                         // source column indexes
    std::vector<const NoiseSpec*> specs;              // per kept column, nullable
};

PerturbPlan make_plan(const Table& table, const PerturbationPolicy& policy) {
    policy.validate(table.schema);
    PerturbPlan plan;
    for (size_t i = 0; i < table.schema.width(); ++i) {
        const auto& col = table.schema.at(i);
        if (policy.suppressed.count(col.name)) continue;
        plan.keep.push_back(i);
        plan.out_schema.columns.push_back(col);
        auto it = policy.noise.find(col.name);
        plan.specs.push_back(it == policy.noise.end() ? nullptr : &it->second);
    }
    return plan;
}

double apply_noise(double x, const NoiseSpec& spec, const PerturbationPolicy& policy,
                   SeededRng& cell_rng) {
    double z = x + sample_noise(spec, cell_rng);
    if (policy.round_to_int) z = std::nearbyint(z);
    if (policy.clamp_nonnegative && z < 0.0) z = 0.0;
    return z;
}

Row perturb_row(const Row& src, const PerturbPlan& plan, const PerturbationPolicy& policy,
                uint64_t base, const SeededRng& root, size_t row_idx) {
    Row out;
    out.reserve(plan.keep.size());
    for (size_t k = 0; k < plan.keep.size(); ++k) {
        const Cell& cell = src[plan.keep[k]];
        if (!plan.specs[k]) {
            out.push_back(cell);
            continue;
        }
        SeededRng cell_rng = root.derive(base ^ (row_idx * 0x100000001b3ULL + k));
        out.push_back(apply_noise(cell_number(cell), *plan.specs[k], policy, cell_rng));
    }
    return out;
}

}  // namespace

Table perturb_table_serial(const Table& table, const PerturbationPolicy& policy,
                           SeededRng& rng) {
    PerturbPlan plan = make_plan(table, policy);
    uint64_t base = rng.next_u64();
    Table out{plan.out_schema, {}};
    out.rows.reserve(table.rows.size());
    for (size_t r = 0; r < table.rows.size(); ++r) {
        out.rows.push_back(perturb_row(table.rows[r], plan, policy, base, rng, r));
    }
    return out;
}

Table perturb_table(const Table& table, const PerturbationPolicy& policy, SeededRng& rng) {
    PerturbPlan plan = make_plan(table, policy);
    uint64_t base = rng.next_u64();
    Table out{plan.out_schema, {}};
    out.rows.resize(table.rows.size());
    const auto n = static_cast<long long>(table.rows.size());
#pragma omp parallel for schedule(static)
    for (long long r = 0; r < n; ++r) {
        out.rows[static_cast<size_t>(r)] = perturb_row(
            table.rows[static_cast<size_t>(r)], plan, policy, base, rng,
            static_cast<size_t>(r));
    }
    return out;
}

MomentEstimate estimate_moments(std::span<const double> perturbed, const NoiseSpec& spec) {
    if (perturbed.empty()) throw EmptyColumn("estimate_moments on empty column");
    MomentEstimate est;
    est.sample_count = perturbed.size();
    double sum = 0.0;
    for (double v : perturbed) sum += v;
    est.est_mean = sum / static_cast<double>(perturbed.size());
    if (perturbed.size() < 2) {
        est.est_variance = 0.0;
        return est;
    }
    double ss = 0.0;
    for (double v : perturbed) {
        double d = v - est.est_mean;
        ss += d * d;
    }
    double sample_var = ss / static_cast<double>(perturbed.size() - 1);
    est.est_variance = std::max(0.0, sample_var - noise_variance(spec));
    return est;
}

}  // namespace fedq
