#ifndef FEDQ_RUNNER_HPP
#define FEDQ_RUNNER_HPP

#include <optional>
#include <string>
#include <vector>

#include "fedq/audit.hpp"
#include "fedq/datastore.hpp"
#include "fedq/perturb.hpp"
#include "fedq/roles.hpp"

#include <nlohmann/json.hpp>

namespace fedq {

struct ProviderConfig {
    std::string id;
    std::string data_path;            // CSV; ignored when `table` is set
    std::optional<Table> table;       // in-memory source (tests, synthetic)
    bool silent_after_ack = false;    // fault injection
};

struct RunConfig {
    std::vector<ProviderConfig> providers;
    PerturbationPolicy policy = PerturbationPolicy::hospital_default();
    size_t m = 8;
    uint64_t seed = 0;
    Query query;
    SessionTiming timing;
    uint64_t step_cap = 100000;
    std::string out_dir;  // empty: nothing written

    void validate() const;
    static RunConfig from_json(const nlohmann::json& j);
};

enum class RunStatus { Ok, NoProviders, PartialProviderFailure, DecryptFailure };

std::string run_status_name(RunStatus s);

struct RunReport {
    RunStatus status = RunStatus::Ok;
    size_t n = 0;
    Table result;
    Transcript transcript;
    std::string result_path;
    std::string transcript_path;
    double wall_ms = 0.0;
    size_t messages_sent = 0;
};

RunReport run_end_to_end(const RunConfig& config);

// Provider identity tokens and sensitive source-cell strings for auditing a
// run made from this config.
std::vector<std::string> provider_ids(const RunConfig& config);
std::vector<std::string> sensitive_cells(const RunConfig& config);

struct StatsRow {
    size_t n = 0;
    std::string family;
    double param = 0.0;
    double mean_abs_mean_err = 0.0;
    double mean_abs_var_err = 0.0;
};

struct StatsConfig {
    std::vector<size_t> sizes{100, 1000, 10000};
    std::vector<NoiseSpec> specs{NoiseSpec::uniform(0.0), NoiseSpec::uniform(5.0),
                                 NoiseSpec::uniform(10.0), NoiseSpec::gaussian(3.0)};
    size_t repetitions = 10;
    uint64_t seed = 0;
};

// Absolute moment-recovery error per (n, spec) cell, averaged over
// repetitions; errors are measured against the unperturbed sample's own
// mean and variance.
std::vector<StatsRow> stats_experiment(const StatsConfig& config);
std::string stats_to_csv(const std::vector<StatsRow>& rows);

}  // namespace fedq

#endif
