#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "fedq/errors.hpp"
#include "fedq/runner.hpp"

using namespace fedq;

// Exit codes, also documented in the README.
enum ExitCode {
    kOk = 0,
    kError = 1,
    kConfigError = 2,
    kNoProviders = 3,
    kPartialProviderFailure = 4,
    kDecryptFailure = 5,
};

namespace {

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string(path) + ": " + e.what());
    }
}

// "builtin:hospital_a", "builtin:hospital_b" and "builtin:synthetic:<n>"
// provider sources work without CSV files on disk.
void resolve_builtins(RunConfig& cfg) {
    for (size_t i = 0; i < cfg.providers.size(); ++i) {
        auto& p = cfg.providers[i];
        if (p.data_path.rfind("builtin:", 0) != 0) continue;
        std::string what = p.data_path.substr(8);
        if (what == "hospital_a") {
            p.table = fixture_hospital_a();
        } else if (what == "hospital_b") {
            p.table = fixture_hospital_b();
        } else if (what.rfind("synthetic:", 0) == 0) {
            size_t n = std::stoul(what.substr(10));
            p.table = gen_synthetic(Schema::hospital(), n, cfg.seed + 1000 + i);
        } else {
            throw ConfigError("unknown builtin source '" + p.data_path + "'");
        }
    }
}

int cmd_run(const std::string& config_path, std::optional<uint64_t> seed,
            std::string out_dir) {
    RunConfig cfg = RunConfig::from_json(load_json(config_path));
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (cfg.out_dir.empty()) cfg.out_dir = "out";
    resolve_builtins(cfg);

    RunReport report = run_end_to_end(cfg);

    nlohmann::ordered_json summary;
    summary["status"] = run_status_name(report.status);
    summary["n"] = report.n;
    summary["result_rows"] = report.result.row_count();
    summary["messages_sent"] = report.messages_sent;
    summary["wall_ms"] = report.wall_ms;
    summary["result"] = report.result_path;
    summary["transcript"] = report.transcript_path;
    std::ofstream(cfg.out_dir + "/run_report.json") << summary.dump(2) << "\n";
    std::cout << summary.dump(2) << "\n";

    switch (report.status) {
        case RunStatus::Ok: return kOk;
        case RunStatus::NoProviders: return kNoProviders;
        case RunStatus::PartialProviderFailure: return kPartialProviderFailure;
        case RunStatus::DecryptFailure: return kDecryptFailure;
    }
    return kError;
}

int cmd_audit(const std::string& transcript_path, const std::string& config_path,
              std::string out_dir) {
    Transcript transcript = Transcript::load(transcript_path);
    RunConfig cfg = RunConfig::from_json(load_json(config_path));
    resolve_builtins(cfg);
    AuditReport report =
        audit_transcript(transcript, provider_ids(cfg), sensitive_cells(cfg));
    std::string text = report.to_json().dump(2);
    std::cout << text << "\n";
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream(out_dir + "/audit_report.json") << text << "\n";
    }
    return report.pass() ? kOk : kError;
}

int cmd_stats(uint64_t seed, std::string out_dir) {
    StatsConfig cfg;
    cfg.seed = seed;
    std::string csv = stats_to_csv(stats_experiment(cfg));
    std::cout << csv;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream(out_dir + "/stats.csv") << csv;
    }
    return kOk;
}

int cmd_gen_data(size_t n, uint64_t seed, const std::string& out_path) {
    Table t = gen_synthetic(Schema::hospital(), n, seed);
    save_csv(t, out_path);
    std::cout << "wrote " << n << " rows to " << out_path << "\n";
    return kOk;
}

// Narrated walkthrough of the key exchange for one provider. The secret
// index is withheld from the provider-view section.
int cmd_keys_demo(size_t m, uint64_t seed) {
    SeededRng provider_rng(seed);
    SeededRng client_rng(seed ^ 0x5eed);

    std::cout << "== provider: generates a set of " << m << " keys ==\n";
    KeySet ks = generate_key_set(m, "demo-alias", provider_rng);
    for (size_t i = 0; i < m; ++i) {
        std::cout << "  key[" << i << "] = "
                  << crypto::to_base64(crypto::Bytes(ks.keys[i].bytes.begin(),
                                                     ks.keys[i].bytes.end()))
                  << "\n";
    }

    crypto::Keypair client = crypto::keypair_from_rng(client_rng);
    Selection sel = select_index(ks, client_rng);
    BlindedResponse blinded = blind(ks, sel, client.public_key, client_rng);
    std::cout << "\n== client: selects one key in secret, encrypts its public key\n"
              << "   under the selected key and fresh decoy keys under the rest ==\n"
              << "  (selected index withheld below)\n";

    std::cout << "\n== provider view: unwrapped candidates, all equally plausible ==\n";
    auto candidates = unwrap(ks, blinded);
    for (size_t i = 0; i < m; ++i) {
        std::cout << "  candidate[" << i << "] = " << crypto::to_base64(candidates[i]) << "\n";
    }

    std::string message = "perturbed result table bytes";
    crypto::Bytes payload(message.begin(), message.end());
    EncryptedBundle bundle = multi_encrypt(payload, "demo-alias", candidates, provider_rng);
    std::cout << "\n== provider: encrypts the payload to every candidate ==\n";
    for (size_t i = 0; i < m; ++i) {
        std::cout << "  payload[" << i << "] = " << bundle.payloads[i].size() << " bytes\n";
    }

    std::cout << "\n== client: opens the bundle with its private key ==\n";
    size_t openable = 0;
    for (const auto& ct : bundle.payloads) {
        if (crypto::open_sealed(client, ct)) ++openable;
    }
    crypto::Bytes plain = open_bundle(bundle, client);
    std::cout << "  decryptable slots: " << openable << " of " << m << "\n"
              << "  recovered: \"" << std::string(plain.begin(), plain.end()) << "\"\n"
              << "  (client's selected index was " << sel.index << ")\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated privacy-preserving query toolkit"};
    app.require_subcommand(1);

    std::string config_path, transcript_path, out_dir, out_path = "synthetic.csv";
    uint64_t seed = 0;
    bool seed_set = false;
    size_t n = 100, m = 8;

    auto add_seed = [&](CLI::App* cmd, bool required) {
        auto* opt = cmd->add_option("--seed", seed, "random seed (runs are reproducible)");
        if (required) opt->required();
        opt->each([&](const std::string&) { seed_set = true; });
    };

    auto* run = app.add_subcommand("run", "end-to-end protocol run on the simulator");
    run->add_option("--config", config_path, "run config JSON")->required();
    add_seed(run, false);
    run->add_option("--out", out_dir, "output directory");

    auto* audit = app.add_subcommand("audit", "privacy checks over a recorded transcript");
    audit->add_option("--transcript", transcript_path, "transcript JSON-lines file")
        ->required();
    audit->add_option("--config", config_path, "run config JSON (source tables)")->required();
    audit->add_option("--out", out_dir, "output directory");

    auto* stats = app.add_subcommand("stats", "perturbation accuracy experiment");
    add_seed(stats, true);
    stats->add_option("--out", out_dir, "output directory");

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic hospital table");
    gen->add_option("--n", n, "row count");
    add_seed(gen, true);
    gen->add_option("--out", out_path, "output CSV path");

    auto* demo = app.add_subcommand("keys-demo", "walkthrough of the key exchange");
    demo->add_option("--m", m, "key set size");
    add_seed(demo, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return cmd_run(config_path, seed_set ? std::optional(seed) : std::nullopt,
                           out_dir);
        }
        if (audit->parsed()) return cmd_audit(transcript_path, config_path, out_dir);
        if (stats->parsed()) return cmd_stats(seed, out_dir);
        if (gen->parsed()) return cmd_gen_data(n, seed, out_path);
        if (demo->parsed()) return cmd_keys_demo(m, seed);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kConfigError;
    } catch (const KeySetTooSmall& e) {
        std::cerr << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kError;
    }
    return kConfigError;
}
