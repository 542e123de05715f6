// Command-line front end: scenario generation, software-receiver processing,
// and truth-vs-receiver validation. Exit codes: 0 pass, 1 metric failure,
// 2 input/usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include "gnsstwin/receiver_pipeline.hpp"
#include "gnsstwin/scenario.hpp"
#include "gnsstwin/simulate.hpp"
#include "gnsstwin/validate.hpp"

namespace {

int cmd_generate(const std::string& config_path, const std::string& outdir, int threads) {
    std::string digest;
    const auto cfg = gnsstwin::load_scenario(config_path, &digest);
    const auto result = gnsstwin::run_generate(cfg, outdir, digest, threads);
    std::filesystem::copy_file(config_path, std::filesystem::path(outdir) / "scenario.json",
                               std::filesystem::copy_options::overwrite_existing);
    std::printf("generated %llu samples -> %s\n",
                static_cast<unsigned long long>(result.n_samples), result.if_path.c_str());
    std::printf("config digest %s, %zu satellites, %llu clipped components\n",
                result.config_digest.c_str(), result.prns.size(),
                static_cast<unsigned long long>(result.clip_count));
    return 0;
}

int cmd_process(const std::string& if_path, const std::string& outdir,
                const gnsstwin::ProcessOptions& opt) {
    const auto result = gnsstwin::run_process(if_path, outdir, opt);
    if (result.truncated_input)
        std::printf("warning: input shorter than the sidecar advertises; "
                    "processed the available whole blocks\n");
    for (const auto& a : result.acquisition)
        std::printf("PRN %2d  %s  metric %6.2f  doppler %8.1f Hz  code phase %7.2f chips\n", a.prn,
                    a.detected ? "acquired" : "   --   ", a.peak_metric, a.doppler_hz,
                    a.code_phase_chips);
    std::printf("%d channels locked, %d decoded, %zu PVT epochs -> %s\n", result.channels_locked,
                result.channels_decoded, result.pvt_epochs, outdir.c_str());
    return 0;
}

int cmd_validate(const std::string& truth_dir, const std::string& rx_dir,
                 const std::string& thresholds_path, const std::string& out_path) {
    gnsstwin::ValidationThresholds th;
    if (!thresholds_path.empty())
        th = gnsstwin::ValidationThresholds::from_json_file(thresholds_path);
    const auto verdict = gnsstwin::run_validate(truth_dir, rx_dir, th);
    const std::filesystem::path out =
        out_path.empty() ? std::filesystem::path(rx_dir) / "verdict.txt"
                         : std::filesystem::path(out_path);
    gnsstwin::write_verdict(verdict, out);
    if (!verdict.position_error_series.empty())
        gnsstwin::write_position_errors(verdict, out.parent_path() / "errors.csv");
    for (const auto& e : verdict.entries)
        std::printf("%-28s %s  measured=%.6g threshold=%.6g  %s\n", e.metric.c_str(),
                    e.pass ? "PASS" : "FAIL", e.measured, e.threshold, e.note.c_str());
    std::printf("verdict: %s -> %s\n", verdict.all_pass() ? "PASS" : "FAIL", out.c_str());
    return verdict.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GPS L1 C/A signal simulator and software receiver"};
    app.require_subcommand(1);

    std::string config_path, outdir, if_path, truth_dir, rx_dir, thresholds_path, verdict_path;
    int threads = 2;
    gnsstwin::ProcessOptions popt;

    auto* gen = app.add_subcommand("generate", "synthesize an IF capture from a scenario config");
    gen->add_option("--config", config_path, "scenario JSON")->required();
    gen->add_option("--out", outdir, "output directory")->required();
    gen->add_option("--threads", threads, "synthesis threads");

    auto* proc = app.add_subcommand("process", "run the software receiver over an IF capture");
    proc->add_option("--if", if_path, "IF sample file (sidecar found beside it)")->required();
    proc->add_option("--out", outdir, "output directory")->required();
    proc->add_option("--prns", popt.prns, "restrict the acquisition search");
    proc->add_flag("--all-prns", popt.search_all_prns, "search PRNs 1..32");
    proc->add_option("--acq-threshold", popt.acq_threshold, "peak metric threshold");
    proc->add_option("--epoch-interval", popt.measurement_interval_s, "measurement spacing, s");
    proc->add_option("--telemetry-decimation", popt.telemetry_decimation,
                     "keep every Nth telemetry row");
    proc->add_option("--threads", popt.threads, "tracking threads");

    auto* val = app.add_subcommand("validate", "diff receiver outputs against the truth model");
    val->add_option("--truth", truth_dir, "generate output directory")->required();
    val->add_option("--receiver", rx_dir, "process output directory")->required();
    val->add_option("--thresholds", thresholds_path, "thresholds JSON");
    val->add_option("--out", verdict_path, "verdict file (default <receiver>/verdict.txt)");

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_generate(config_path, outdir, threads);
        if (proc->parsed()) return cmd_process(if_path, outdir, popt);
        if (val->parsed()) return cmd_validate(truth_dir, rx_dir, thresholds_path, verdict_path);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
