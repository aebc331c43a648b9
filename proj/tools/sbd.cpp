// SPDX-License-Identifier: Apache-2.0
// Command-line front end: detect, train-toy, evaluate, synth, plan, merge,
// serve, features and extract.

#include "sbd/annotation_service.hpp"
#include "sbd/dataset.hpp"
#include "sbd/error.hpp"
#include "sbd/evaluation.hpp"
#include "sbd/frame_io.hpp"
#include "sbd/parallel.hpp"
#include "sbd/pipeline.hpp"
#include "sbd/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw sbd::DataError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw sbd::DataError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw sbd::DataError("cannot write " + path.string());
    out << text;
}

// Every PipelineConfig field as a kebab-case flag; only flags actually given
// override the config file.
struct ConfigFlags {
    double sigma = 0, t_static = 0, cut_threshold = 0, cut_kappa = 0, cut_epsilon = 0, gradual_threshold = 0;
    int half_window = 0, cut_k = 0, t_seg = 0, histogram_bins = 0;
    std::int64_t merge_distance = 0, expansion = 0;
    std::vector<int> scales;
    std::string cut_scores, toy_params, config_path;
    std::vector<std::pair<std::string, CLI::Option*>> opts;

    void bind(CLI::App* app) {
        app->add_option("--config", config_path, "Pipeline config JSON (keys mirror the flags below, snake_case)")
            ->check(CLI::ExistingFile);
        auto add = [&](const std::string& key, auto& var, const std::string& help) {
            std::string flag = "--" + key;
            std::replace(flag.begin(), flag.end(), '_', '-');
            opts.emplace_back(key, app->add_option(flag, var, help));
        };
        add("sigma", sigma, "Dynamic threshold ratio");
        add("t_static", t_static, "Static threshold");
        add("half_window", half_window, "Adaptive threshold half window a");
        add("scales", scales, "Sampling strides, ascending");
        add("merge_distance", merge_distance, "Cross-scale merge distance in frames");
        add("cut_k", cut_k, "Frames on each side of a cut window");
        add("cut_threshold", cut_threshold, "Cut decision threshold");
        add("cut_kappa", cut_kappa, "Baseline cut scorer calibration constant");
        add("cut_epsilon", cut_epsilon, "Baseline cut scorer stabiliser");
        add("cut_scores", cut_scores, "External cut score JSON (replaces the baseline scorer)");
        add("expansion", expansion, "Frames added on each side of a surviving candidate");
        add("t_seg", t_seg, "Gradual detector window length (even)");
        add("gradual_threshold", gradual_threshold, "Gradual detection probability threshold");
        add("toy_params", toy_params, "Trained toy scorer parameters (enables the gradual stage)");
        add("histogram_bins", histogram_bins, "Histogram bins per channel when extracting features");
    }

    sbd::PipelineConfig resolve() const {
        json j = json::object();
        if (!config_path.empty()) j = read_json_file(config_path);
        const json given = json{{"sigma", sigma},
                                {"t_static", t_static},
                                {"half_window", half_window},
                                {"scales", scales},
                                {"merge_distance", merge_distance},
                                {"cut_k", cut_k},
                                {"cut_threshold", cut_threshold},
                                {"cut_kappa", cut_kappa},
                                {"cut_epsilon", cut_epsilon},
                                {"cut_scores", cut_scores},
                                {"expansion", expansion},
                                {"t_seg", t_seg},
                                {"gradual_threshold", gradual_threshold},
                                {"toy_params", toy_params},
                                {"histogram_bins", histogram_bins}};
        for (const auto& [key, opt] : opts) {
            if (opt->count() > 0) j[key] = given.at(key);
        }
        return sbd::pipeline_config_from_json(j);
    }
};

sbd::TransitionReport detect_one(const std::string& video, const fs::path& frames, const fs::path& features_file,
                                 const sbd::PipelineConfig& cfg, const sbd::PipelineModels& models, int threads) {
    const auto t0 = std::chrono::steady_clock::now();
    sbd::FeatureSequence features;
    if (!features_file.empty()) {
        features = sbd::load_external_features(features_file);
    } else {
        const auto images = sbd::load_frame_directory(frames);
        features = sbd::extract_features(images, cfg.histogram_bins, threads);
    }
    const double extract_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    auto report = sbd::run_pipeline(features, cfg, models, video, threads);
    report.times.extract_ms = extract_ms;
    return report;
}

std::vector<sbd::TypedTransitions> read_transitions(const fs::path& path, bool reports) {
    const json j = read_json_file(path);
    std::vector<sbd::TypedTransitions> out;
    if (reports) {
        if (j.is_array()) {
            for (const auto& r : j) out.push_back(sbd::report_transitions_from_json(r));
        } else {
            out.push_back(sbd::report_transitions_from_json(j));
        }
    } else {
        for (const auto& a : sbd::parse_annotations(path)) out.push_back(sbd::transitions_of(a));
    }
    return out;
}

sbd::AnnotationServer* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

int run(int argc, char** argv) {
    CLI::App app{"Cascade shot boundary detection toolkit"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = all logical cores)")
        ->envname("SBD_THREADS")
        ->check(CLI::NonNegativeNumber);

    // detect
    auto* detect = app.add_subcommand("detect", "Run the cascade on frames, features or a corpus");
    std::string d_frames, d_features, d_corpus, d_out, d_video;
    bool d_no_timing = false;
    ConfigFlags d_cfg;
    auto* in_frames = detect->add_option("--frames", d_frames, "Directory of frame_%08d images")->check(CLI::ExistingDirectory);
    auto* in_feats = detect->add_option("--features", d_features, "SBDF1 or JSON feature file")->check(CLI::ExistingFile);
    auto* in_corpus = detect->add_option("--corpus", d_corpus, "Corpus manifest; writes an array of reports")->check(CLI::ExistingFile);
    in_frames->excludes(in_feats)->excludes(in_corpus);
    in_feats->excludes(in_corpus);
    detect->add_option("--out", d_out, "Report JSON path")->required();
    detect->add_option("--video", d_video, "Video id for single-video runs");
    detect->add_flag("--no-timing", d_no_timing, "Omit timing fields so reports are byte-comparable");
    d_cfg.bind(detect);

    // train-toy
    auto* train = app.add_subcommand("train-toy", "Train the linear gradual scorer on an annotated corpus");
    std::string t_corpus, t_out;
    sbd::TrainConfig tcfg;
    ConfigFlags t_cfg;
    train->add_option("--corpus", t_corpus, "Corpus manifest")->required()->check(CLI::ExistingFile);
    train->add_option("--out", t_out, "Parameter file")->required();
    train->add_option("--epochs", tcfg.epochs, "Epochs")->capture_default_str();
    train->add_option("--lr", tcfg.learning_rate, "Learning rate")->capture_default_str();
    train->add_option("--momentum", tcfg.momentum, "SGD momentum")->capture_default_str();
    train->add_option("--lambda", tcfg.lambda, "Localisation loss weight")->capture_default_str();
    train->add_option("--negative-ratio", tcfg.negative_ratio, "Mined negatives per positive")->capture_default_str();
    train->add_option("--seed", tcfg.seed, "Initialisation and shuffling seed")->capture_default_str();
    t_cfg.bind(train);

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Score reports against ground-truth annotations");
    std::string e_pred, e_gt, e_criterion = "overlap", e_out;
    double e_iou = 0.5;
    eval->add_option("--pred", e_pred, "Report or array of reports")->required()->check(CLI::ExistingFile);
    eval->add_option("--gt", e_gt, "Annotation object or array")->required()->check(CLI::ExistingFile);
    eval->add_option("--criterion", e_criterion, "overlap or iou")->check(CLI::IsMember({"overlap", "iou"}))->capture_default_str();
    eval->add_option("--iou-threshold", e_iou, "IoU threshold in (0, 1]")->capture_default_str();
    eval->add_option("--out", e_out, "Also write the result JSON here");

    // synth
    auto* synth = app.add_subcommand("synth", "Render synthetic videos with ground truth");
    std::string s_spec, s_out;
    synth->add_option("--spec", s_spec, "Synth spec object or array")->required()->check(CLI::ExistingFile);
    synth->add_option("--out", s_out, "Output directory (one subdirectory per video plus manifest.json)")->required();

    // plan
    auto* plan = app.add_subcommand("plan", "Write a randomised synth spec for a whole corpus");
    std::string p_out, p_prefix = "video";
    int p_count = 60, p_cuts = 150, p_grads = 120;
    std::int64_t p_length = 300, p_gap = 20;
    std::uint64_t p_seed = 1;
    sbd::Perturbation p_pert;
    plan->add_option("--out", p_out, "Spec JSON path")->required();
    plan->add_option("--prefix", p_prefix, "Video id prefix")->capture_default_str();
    plan->add_option("--count", p_count, "Videos")->capture_default_str();
    plan->add_option("--length", p_length, "Frames per video")->capture_default_str();
    plan->add_option("--cuts", p_cuts, "Total cuts")->capture_default_str();
    plan->add_option("--graduals", p_grads, "Total graduals")->capture_default_str();
    plan->add_option("--min-gap", p_gap, "Minimum frames between transitions")->capture_default_str();
    plan->add_option("--seed", p_seed, "Seed")->capture_default_str();
    plan->add_option("--shake", p_pert.shake, "Camera shake amplitude in pixels")->capture_default_str();
    plan->add_option("--flicker", p_pert.flicker, "Relative brightness flicker")->capture_default_str();
    plan->add_option("--noise", p_pert.noise, "Sensor noise standard deviation")->capture_default_str();

    // merge
    auto* merge = app.add_subcommand("merge", "Reconcile two annotators' records of one video");
    std::string m_a, m_b, m_out;
    merge->add_option("--a", m_a, "First annotation")->required()->check(CLI::ExistingFile);
    merge->add_option("--b", m_b, "Second annotation")->required()->check(CLI::ExistingFile);
    merge->add_option("--out", m_out, "Merged annotation path")->required();

    // serve
    auto* serve = app.add_subcommand("serve", "Annotation HTTP service");
    std::string v_corpus, v_store = "annotations", v_host = "127.0.0.1";
    int v_port = 8741;
    serve->add_option("--corpus", v_corpus, "Corpus manifest")->required()->check(CLI::ExistingFile);
    serve->add_option("--store", v_store, "Annotation store directory")->capture_default_str();
    serve->add_option("--port", v_port, "Port")->capture_default_str();
    serve->add_option("--host", v_host, "Bind address")->capture_default_str();

    // features
    auto* feats = app.add_subcommand("features", "Extract histogram features into an SBDF1 file");
    std::string f_frames, f_out;
    int f_bins = sbd::kDefaultHistogramBins;
    feats->add_option("--frames", f_frames, "Frame directory")->required()->check(CLI::ExistingDirectory);
    feats->add_option("--out", f_out, "Feature file")->required();
    feats->add_option("--bins", f_bins, "Bins per channel")->capture_default_str();

    // extract
    auto* extract = app.add_subcommand("extract", "Decode a video into numbered frames with an external decoder");
    std::string x_video, x_out, x_decoder = sbd::kDefaultDecoderTemplate;
    extract->add_option("--video", x_video, "Input video")->required()->check(CLI::ExistingFile);
    extract->add_option("--out", x_out, "Frame directory")->required();
    extract->add_option("--decoder", x_decoder, "Command template with {input} and {output}")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (detect->parsed()) {
        if (d_frames.empty() && d_features.empty() && d_corpus.empty()) {
            std::cerr << "detect: one of --frames, --features or --corpus is required\n";
            return 1;
        }
        const sbd::PipelineConfig cfg = d_cfg.resolve();
        const sbd::PipelineModels models = sbd::PipelineModels::load(cfg);
        json out;
        if (!d_corpus.empty()) {
            out = json::array();
            for (const auto& e : sbd::load_manifest(d_corpus)) {
                out.push_back(sbd::to_json(detect_one(e.video, e.frames_dir, {}, cfg, models, threads), !d_no_timing));
            }
        } else {
            std::string video = d_video;
            if (video.empty()) video = fs::path(d_frames.empty() ? d_features : d_frames).filename().string();
            out = sbd::to_json(detect_one(video, d_frames, d_features, cfg, models, threads), !d_no_timing);
        }
        write_text(d_out, out.dump(2) + "\n");
        return 0;
    }

    if (train->parsed()) {
        const sbd::PipelineConfig cfg = t_cfg.resolve();
        sbd::GridConfig grid_cfg;
        grid_cfg.window_length = cfg.t_seg;
        const sbd::SegmentGrid grid = sbd::generate_default_segments(grid_cfg);
        std::vector<sbd::TrainingWindow> corpus;
        for (const auto& e : sbd::load_manifest(t_corpus)) {
            const auto anns = sbd::parse_annotations(e.annotation_path);
            if (anns.size() != 1) throw sbd::DataError(e.annotation_path.string() + ": expected exactly one annotation record");
            const auto features = sbd::extract_features(sbd::load_frame_directory(e.frames_dir), cfg.histogram_bins, threads);
            auto windows = sbd::build_training_windows(features, anns.front(), cfg, grid);
            std::move(windows.begin(), windows.end(), std::back_inserter(corpus));
        }
        const auto result = sbd::train_toy_scorer(corpus, grid, tcfg);
        sbd::save_toy_params(result.params, t_out);
        json summary = {{"windows", corpus.size()}, {"epoch_losses", result.epoch_losses}, {"out", t_out}};
        std::cout << summary.dump(2) << "\n";
        return 0;
    }

    if (eval->parsed()) {
        const sbd::MatchCriterion criterion =
            e_criterion == "overlap" ? sbd::MatchCriterion::overlap() : sbd::MatchCriterion::iou(e_iou);
        const auto result = sbd::evaluate_corpus(read_transitions(e_pred, true), read_transitions(e_gt, false), criterion);
        const std::string text = sbd::to_json(result).dump(2) + "\n";
        std::cout << text;
        if (!e_out.empty()) write_text(e_out, text);
        return 0;
    }

    if (synth->parsed()) {
        std::ifstream in(s_spec);
        const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const auto specs = sbd::parse_synth_specs(text);
        std::vector<sbd::ManifestEntry> entries(specs.size());
        sbd::parallel_for(specs.size(), threads, [&](std::size_t i) {
            entries[i] = sbd::write_synth_video(sbd::synthesize_video(specs[i]), fs::path(s_out) / specs[i].video);
        });
        sbd::write_manifest(entries, fs::path(s_out) / "manifest.json");
        return 0;
    }

    if (plan->parsed()) {
        json specs = json::array();
        for (const auto& s : sbd::plan_corpus(p_prefix, p_count, p_length, p_cuts, p_grads, p_seed, p_gap, p_pert)) {
            specs.push_back(sbd::to_json(s));
        }
        write_text(p_out, specs.dump(2) + "\n");
        return 0;
    }

    if (merge->parsed()) {
        const auto a = sbd::parse_annotations(m_a), b = sbd::parse_annotations(m_b);
        if (a.size() != 1 || b.size() != 1) throw sbd::DataError("merge expects one annotation record per file");
        const auto result = sbd::merge_double_annotations(a.front(), b.front());
        sbd::write_annotations({result.merged}, m_out);
        json dis = json::array();
        for (const auto& d : result.disagreements) {
            dis.push_back({{"kind", d.kind}, {"annotator", d.annotator}, {"begin", d.interval.begin},
                           {"end", d.interval.end}, {"reason", d.reason}});
        }
        std::cout << json{{"disagreements", dis}}.dump(2) << "\n";
        return 0;
    }

    if (serve->parsed()) {
        sbd::AnnotationStore store(sbd::load_manifest(v_corpus), v_store);
        sbd::AnnotationServer server(store);
        const int port = server.bind(v_host, v_port);
        if (port < 0) throw sbd::DataError("cannot bind " + v_host + ":" + std::to_string(v_port));
        g_server = &server;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::cerr << "serving on http://" << v_host << ":" << port << "\n";
        server.listen_after_bind();
        g_server = nullptr;
        return 0;
    }

    if (feats->parsed()) {
        if (f_bins < 2 || f_bins > 256) throw sbd::DataError("--bins must lie in [2, 256]");
        sbd::write_feature_file(sbd::extract_features(sbd::load_frame_directory(f_frames), f_bins, threads), f_out);
        return 0;
    }

    if (extract->parsed()) {
        std::cout << sbd::decode_video_frames(x_video, x_out, x_decoder) << " frames\n";
        return 0;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const sbd::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
