#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "osids/error.hpp"
#include "osids/flow_assembly.hpp"
#include "osids/flowset.hpp"
#include "osids/io_util.hpp"
#include "osids/pcap.hpp"
#include "osids/pipeline.hpp"
#include "osids/reporting.hpp"
#include "osids/synth.hpp"

namespace {

using namespace osids;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path);
    return read_stream(in);
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + path);
}

struct AssembleOpts {
    std::string pcap_path, labels_path, out_path;
    double idle_timeout = kDefaultIdleTimeout;
};

int run_assemble(const AssembleOpts& o) {
    const CaptureResult capture = parse_capture(read_file(o.pcap_path));
    std::vector<Flow> flows = assemble_flows(capture.packets, o.idle_timeout);
    std::vector<AttackRecord> records;
    if (!o.labels_path.empty()) records = parse_attack_csv(read_file(o.labels_path));
    flows = label_flows(std::move(flows), records);
    write_flows_file(o.out_path, flows);
    std::cerr << "assembled " << flows.size() << " flows from " << capture.packets.size()
              << " packets (skipped: " << capture.stats.total() << ")\n";
    return 0;
}

struct TrainOpts {
    std::string flows_path, out_path;
    TrainConfig config;
};

int run_train(const TrainOpts& o) {
    const auto flows = read_flows_file(o.flows_path);
    const ModelBundle bundle = train_full(flows, o.config);
    save_bundle_file(o.out_path, bundle);
    std::cerr << "trained on " << flows.size() << " flows, " << bundle.n_classes()
              << " classes; bundle written to " << o.out_path << "\n";
    return 0;
}

struct DetectOpts {
    std::string bundle_path, flows_path, out_path;
};

int run_detect(const DetectOpts& o) {
    const ModelBundle bundle = load_bundle_file(o.bundle_path);
    const auto flows = read_flows_file(o.flows_path);
    std::vector<DetectionVerdict> verdicts;
    verdicts.reserve(flows.size());
    for (const auto& f : flows) verdicts.push_back(detect(f, bundle));
    write_file(o.out_path, verdicts_to_csv(verdicts, bundle.classifier.class_names));
    std::size_t unknown = 0;
    for (const auto& v : verdicts)
        if (v.final_label == kUnknownLabel) ++unknown;
    std::cerr << "detected " << flows.size() << " flows, " << unknown
              << " flagged as unknown attacks\n";
    return 0;
}

struct EvalOpts {
    std::string verdicts_path, flows_path, bundle_path, out_path, csv_path;
};

int run_eval(const EvalOpts& o) {
    const VerdictFile verdicts = parse_verdict_csv(read_file(o.verdicts_path));
    const auto flows = read_flows_file(o.flows_path);
    if (verdicts.rows.size() != flows.size())
        throw Error("verdict count (" + std::to_string(verdicts.rows.size()) +
                    ") does not match flow count (" + std::to_string(flows.size()) + ")");

    std::vector<std::string> known = verdicts.class_names;
    if (!o.bundle_path.empty())
        known = load_bundle_file(o.bundle_path).classifier.class_names;
    if (known.empty())
        throw Error("no class list: verdict CSV lacks the '# classes' line and no --bundle given");

    std::vector<std::string> predicted, truth;
    for (std::size_t i = 0; i < flows.size(); ++i) {
        const auto& row = verdicts.rows[i];
        if (row.flow_key != flows[i].key.to_string() ||
            std::abs(row.start_time - flows[i].start_time) > 1e-5)
            throw Error("verdict row " + std::to_string(i + 1) + " (" + row.flow_key +
                        ") does not match flow " + flows[i].key.to_string() +
                        "; were these files produced from the same flow set?");
        predicted.push_back(row.final_label);
        truth.push_back(flows[i].label);
    }

    const EvalReport report = evaluate(predicted, truth, known);
    const std::string text = render_report_text(report);
    if (o.out_path.empty())
        std::cout << text;
    else
        write_file(o.out_path, text);
    if (!o.csv_path.empty()) write_file(o.csv_path, render_report_csv(report));
    return 0;
}

struct SynthOpts {
    std::string spec_path, out_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> difficulty;
};

int run_synth(const SynthOpts& o) {
    SynthSpec spec = parse_synth_spec(read_file(o.spec_path));
    if (o.seed) spec.seed = *o.seed;
    if (o.difficulty) spec.difficulty = *o.difficulty;
    const auto flows = generate_flows(spec.classes, spec.counts, spec.seed, spec.difficulty);
    write_flows_file(o.out_path, flows);
    std::cerr << "generated " << flows.size() << " flows across " << spec.classes.size()
              << " classes\n";
    return 0;
}

int run_inspect(const std::string& bundle_path) {
    const ModelBundle bundle = load_bundle_file(bundle_path);
    std::printf("bundle version %u\n", bundle.version);
    std::printf("classes %d\n", bundle.n_classes());
    for (int c = 0; c < bundle.n_classes(); ++c)
        std::printf("  class %d %s\n", c, bundle.classifier.class_names[c].c_str());
    static const char* kNormNames[4] = {"DIRC", "PLDL", "TCPW", "ITVT"};
    for (int col = 0; col < 4; ++col)
        std::printf("norm %s mean=%.9g std=%.9g\n", kNormNames[col], bundle.norm.mean[col],
                    bundle.norm.stddev[col]);
    std::printf("openmax attenuation=%g tail_fraction=%g tail_floor=%d\n",
                bundle.openmax_config.attenuation, bundle.openmax_config.tail_fraction,
                bundle.openmax_config.tail_floor);
    for (const auto& cal : bundle.calibrations) {
        double norm_sq = 0.0;
        for (double v : cal.mav) norm_sq += v * v;
        std::printf("  weibull class=%d tau=%.9g kappa=%.9g lambda=%.9g mav_norm=%.9g\n",
                    cal.class_index, cal.rho.shift, cal.rho.shape, cal.rho.scale,
                    std::sqrt(norm_sq));
    }
    for (const auto& thr : bundle.thresholds)
        std::printf("  vae class=%d threshold=%.9g position=%g\n", thr.class_index,
                    thr.threshold, thr.quantile_position);
    for (const auto& [key, value] : bundle.train_echo)
        std::printf("train %s %s\n", key.c_str(), value.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"osids - open-set intrusion detection over network flows"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key = value options file; flags take precedence");

    AssembleOpts assemble_opts;
    auto* assemble = app.add_subcommand(
        "assemble", "parse a capture file and reassemble labeled bidirectional flows");
    assemble->add_option("--pcap", assemble_opts.pcap_path, "capture file (classic pcap)")
        ->required();
    assemble->add_option("--labels", assemble_opts.labels_path,
                         "attack records CSV (src_ip,dst_ip,start_time,end_time,label)");
    assemble->add_option("--out", assemble_opts.out_path, "output flow container")->required();
    assemble
        ->add_option("--idle-timeout", assemble_opts.idle_timeout,
                     "split flows on gaps longer than this many seconds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    TrainOpts train_opts;
    auto* train = app.add_subcommand("train", "train the two-stage model on labeled flows");
    train->add_option("--flows", train_opts.flows_path, "training flow container")->required();
    train->add_option("--out", train_opts.out_path, "output model bundle")->required();
    train->add_option("--seed", train_opts.config.seed, "master RNG seed")
        ->capture_default_str();
    train->add_option("--epochs", train_opts.config.stage1.epochs, "stage-1 epochs")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    train->add_option("--batch", train_opts.config.stage1.batch_size, "stage-1 batch size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    double lr = train_opts.config.stage1.optimizer.learning_rate;
    train->add_option("--lr", lr, "learning rate for both stages")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    std::string optimizer = "adam";
    train->add_option("--optimizer", optimizer, "optimizer")
        ->check(CLI::IsMember({"adam", "sgd"}))
        ->capture_default_str();
    train->add_option("--vae-epochs", train_opts.config.vae.epochs, "stage-2 epochs per class")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    train->add_option("--vae-batch", train_opts.config.vae.batch_size, "stage-2 batch size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train->add_option("--kl-weight", train_opts.config.vae.kl_weight, "KL term weight")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    train
        ->add_option("--attenuation", train_opts.config.openmax.attenuation,
                     "score recalibration attenuation rate")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    train
        ->add_option("--tail-fraction", train_opts.config.openmax.tail_fraction,
                     "fraction of per-class samples in the Weibull tail")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    train->add_option("--tail-floor", train_opts.config.openmax.tail_floor,
                      "minimum Weibull tail length")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train
        ->add_option("--threshold-position", train_opts.config.quantile_position,
                     "VAE loss threshold quantile position")
        ->check(CLI::Range(1e-9, 1.0))
        ->capture_default_str();
    bool calibrate_all = false;
    train->add_flag("--calibrate-all", calibrate_all,
                    "calibrate on every training sample, not only correctly classified ones");

    DetectOpts detect_opts;
    auto* detect_cmd = app.add_subcommand("detect", "run dual detection over a flow container");
    detect_cmd->add_option("--bundle", detect_opts.bundle_path, "trained model bundle")
        ->required();
    detect_cmd->add_option("--flows", detect_opts.flows_path, "flow container to score")
        ->required();
    detect_cmd->add_option("--out", detect_opts.out_path, "output verdict CSV")->required();

    EvalOpts eval_opts;
    auto* eval_cmd =
        app.add_subcommand("eval", "score verdicts against ground-truth flow labels");
    eval_cmd->add_option("--verdicts", eval_opts.verdicts_path, "verdict CSV from detect")
        ->required();
    eval_cmd->add_option("--flows", eval_opts.flows_path, "flow container with truth labels")
        ->required();
    eval_cmd->add_option("--bundle", eval_opts.bundle_path,
                         "model bundle (overrides the verdict CSV class list)");
    eval_cmd->add_option("--out", eval_opts.out_path, "report text output (default stdout)");
    eval_cmd->add_option("--csv", eval_opts.csv_path, "machine-readable report CSV");

    SynthOpts synth_opts;
    auto* synth = app.add_subcommand("synth", "generate labeled synthetic flows");
    synth->add_option("--spec", synth_opts.spec_path, "JSON class spec file")->required();
    synth->add_option("--out", synth_opts.out_path, "output flow container")->required();
    std::uint64_t synth_seed = 0;
    auto* seed_opt = synth->add_option("--seed", synth_seed, "override the spec's seed");
    double synth_difficulty = 0.0;
    auto* diff_opt = synth
                         ->add_option("--difficulty", synth_difficulty,
                                      "override the spec's difficulty (0 = fully separable)")
                         ->check(CLI::Range(0.0, 1.0));

    std::string inspect_bundle;
    auto* inspect = app.add_subcommand("inspect", "print a bundle summary");
    inspect->add_option("--bundle", inspect_bundle, "model bundle to describe")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    train_opts.config.stage1.optimizer.learning_rate = lr;
    train_opts.config.vae.optimizer.learning_rate = lr;
    train_opts.config.stage1.optimizer.method =
        optimizer == "sgd" ? nn::OptMethod::SGD : nn::OptMethod::Adam;
    train_opts.config.vae.optimizer.method = train_opts.config.stage1.optimizer.method;
    train_opts.config.calibrate_on_correct_only = !calibrate_all;
    if (*seed_opt) synth_opts.seed = synth_seed;
    if (*diff_opt) synth_opts.difficulty = synth_difficulty;

    try {
        if (app.got_subcommand(assemble)) return run_assemble(assemble_opts);
        if (app.got_subcommand(train)) return run_train(train_opts);
        if (app.got_subcommand(detect_cmd)) return run_detect(detect_opts);
        if (app.got_subcommand(eval_cmd)) return run_eval(eval_opts);
        if (app.got_subcommand(synth)) return run_synth(synth_opts);
        if (app.got_subcommand(inspect)) return run_inspect(inspect_bundle);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
