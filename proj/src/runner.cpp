#include "fedq/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>

#include "fedq/errors.hpp"

namespace fedq {

void RunConfig::validate() const {
    if (providers.empty()) throw ConfigError("at least one provider required");
    if (m < kMinKeySetSize) throw ConfigError("m must be >= 2");
    std::set<std::string> ids;
    for (const auto& p : providers) {
        if (p.id.empty()) throw ConfigError("provider id must not be empty");
        if (!ids.insert(p.id).second) throw ConfigError("duplicate provider id '" + p.id + "'");
        if (!p.table && p.data_path.empty()) {
            throw ConfigError("provider '" + p.id + "' has no data source");
        }
    }
    policy.validate(Schema::hospital());
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig cfg;
    if (!j.contains("providers")) throw ConfigError("missing 'providers'");
    for (const auto& p : j.at("providers")) {
        ProviderConfig pc;
        pc.id = p.at("id").get<std::string>();
        pc.data_path = p.value("data", std::string{});
        cfg.providers.push_back(std::move(pc));
    }
    if (j.contains("policy")) cfg.policy = PerturbationPolicy::from_json(j.at("policy"));
    cfg.m = j.value("m", size_t{8});
    if (!j.contains("seed")) throw ConfigError("missing 'seed'; runs must be reproducible");
    cfg.seed = j.at("seed").get<uint64_t>();
    if (j.contains("query")) cfg.query = query_from_json(j.at("query"));
    if (j.contains("timing")) {
        const auto& t = j.at("timing");
        cfg.timing.ack_deadline = t.value("ack_deadline", cfg.timing.ack_deadline);
        cfg.timing.keyset_delay = t.value("keyset_delay", cfg.timing.keyset_delay);
        cfg.timing.phase_timeout = t.value("phase_timeout", cfg.timing.phase_timeout);
    }
    cfg.step_cap = j.value("step_cap", uint64_t{100000});
    cfg.out_dir = j.value("out", std::string{});
    cfg.validate();
    return cfg;
}

std::string run_status_name(RunStatus s) {
    switch (s) {
        case RunStatus::Ok: return "ok";
        case RunStatus::NoProviders: return "no_providers";
        case RunStatus::PartialProviderFailure: return "partial_provider_failure";
        case RunStatus::DecryptFailure: return "decrypt_failure";
    }
    return "?";
}

namespace {
Table provider_table(const ProviderConfig& p) {
    if (p.table) return *p.table;
    return load_csv(p.data_path, Schema::hospital());
}
}  // namespace

std::vector<std::string> provider_ids(const RunConfig& config) {
    std::vector<std::string> out;
    for (const auto& p : config.providers) out.push_back(p.id);
    return out;
}

std::vector<std::string> sensitive_cells(const RunConfig& config) {
    std::set<std::string> cells;
    for (const auto& p : config.providers) {
        Table t = provider_table(p);
        for (size_t c = 0; c < t.schema.width(); ++c) {
            if (t.schema.at(c).kind == ColumnKind::Identifier) continue;
            for (const auto& row : t.rows) cells.insert(cell_to_string(row[c]));
        }
    }
    return {cells.begin(), cells.end()};
}

RunReport run_end_to_end(const RunConfig& config) {
    config.validate();
    auto t0 = std::chrono::steady_clock::now();

    SeededRng master(config.seed);
    std::string session_id = master.derive(0).hex_token(8);

    ClientNode client("client", session_id, config.query, config.m, Schema::hospital(),
                      master.derive(1), config.timing);
    MediatorNode mediator("mediator", config.timing);

    std::vector<std::unique_ptr<ProviderNode>> providers;
    for (size_t i = 0; i < config.providers.size(); ++i) {
        const auto& pc = config.providers[i];
        auto node = std::make_unique<ProviderNode>(pc.id, provider_table(pc), config.policy,
                                                   master.derive(100 + i), config.timing);
        node->set_silent_after_ack(pc.silent_after_ack);
        mediator.register_provider(pc.id);
        providers.push_back(std::move(node));
    }

    SimNet net(config.seed, config.step_cap);
    net.add_party(&client);
    net.add_party(&mediator);
    for (auto& p : providers) net.add_party(p.get());

    PartyOutput kickoff = client.start("mediator");
    for (auto& env : kickoff.messages) net.post(std::move(env));
    for (auto& timer : kickoff.timers) net.schedule("client", timer);

    RunReport report;
    report.transcript = net.run();
    report.n = client.n();
    for (const auto& e : report.transcript.entries) {
        if (e.direction == "send") ++report.messages_sent;
    }

    switch (client.phase()) {
        case ClientPhase::Done:
            report.status = RunStatus::Ok;
            report.result = *client.result();
            break;
        case ClientPhase::Failed:
            if (client.failure() == "NoProviders") {
                report.status = RunStatus::NoProviders;
            } else if (client.failure() == "DecryptFailure") {
                report.status = RunStatus::DecryptFailure;
            } else {
                report.status = RunStatus::PartialProviderFailure;
            }
            break;
        default:
            report.status = RunStatus::PartialProviderFailure;
            break;
    }

    if (!config.out_dir.empty()) {
        std::filesystem::create_directories(config.out_dir);
        report.result_path = config.out_dir + "/result.csv";
        report.transcript_path = config.out_dir + "/transcript.jsonl";
        save_csv(report.result, report.result_path);
        report.transcript.save(report.transcript_path);
    }

    report.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    return report;
}

std::vector<StatsRow> stats_experiment(const StatsConfig& config) {
    struct Cell {
        size_t n;
        NoiseSpec spec;
    };
    std::vector<Cell> cells;
    for (size_t n : config.sizes) {
        for (const auto& spec : config.specs) cells.push_back({n, spec});
    }

    std::vector<StatsRow> rows(cells.size());
    const auto cell_count = static_cast<long long>(cells.size());
#pragma omp parallel for schedule(dynamic)
    for (long long c = 0; c < cell_count; ++c) {
        const auto& cell = cells[static_cast<size_t>(c)];
        SeededRng cell_rng = SeededRng(config.seed).derive(1000 + static_cast<uint64_t>(c));
        double mean_err = 0.0;
        double var_err = 0.0;
        for (size_t rep = 0; rep < config.repetitions; ++rep) {
            SeededRng rng = cell_rng.derive(rep);
            GenSpec gen = default_gen_spec();
            gen["age"] = ColumnGen::uniform_int(20, 80);
            Table data = gen_synthetic(Schema::hospital(), cell.n, rng.next_u64(), gen);
            auto original = data.numeric_column("age");
            MomentEstimate truth = estimate_moments(original, NoiseSpec::uniform(0.0));

            PerturbationPolicy policy;
            policy.noise["age"] = cell.spec;
            Table perturbed = perturb_table(data, policy, rng);
            MomentEstimate est = estimate_moments(perturbed.numeric_column("age"), cell.spec);

            mean_err += std::abs(est.est_mean - truth.est_mean);
            var_err += std::abs(est.est_variance - truth.est_variance);
        }
        StatsRow row;
        row.n = cell.n;
        row.family = cell.spec.family == NoiseFamily::Uniform ? "uniform" : "gaussian";
        row.param = cell.spec.family == NoiseFamily::Uniform ? cell.spec.alpha : cell.spec.sigma;
        row.mean_abs_mean_err = mean_err / static_cast<double>(config.repetitions);
        row.mean_abs_var_err = var_err / static_cast<double>(config.repetitions);
        rows[static_cast<size_t>(c)] = row;
    }
    return rows;
}

std::string stats_to_csv(const std::vector<StatsRow>& rows) {
    std::string out = "n,family,param,mean_abs_mean_err,mean_abs_var_err\n";
    for (const auto& r : rows) {
        out += std::to_string(r.n) + "," + r.family + "," + format_number(r.param) + "," +
               format_number(r.mean_abs_mean_err) + "," + format_number(r.mean_abs_var_err) +
               "\n";
    }
    return out;
}

}  // namespace fedq
