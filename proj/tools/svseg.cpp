#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "svseg/error.hpp"
#include "svseg/learner.hpp"
#include "svseg/pipeline.hpp"
#include "svseg/report.hpp"
#include "svseg/solver.hpp"
#include "svseg/stgraph.hpp"
#include "svseg/supervoxel.hpp"
#include "svseg/synthgen.hpp"
#include "svseg/videoio.hpp"

namespace fs = std::filesystem;
using namespace svseg;

namespace {

std::string labeling_text(const Labeling& l) {
    std::string s;
    for (Label x : l)
        s += x == Label::Human ? '+' : '-';
    return s;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Random potentials of the same shape the acceptance check uses.
PotentialSet random_instance(std::uint64_t seed, std::size_t nodes) {
    std::mt19937_64 rng(seed);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    std::vector<double> p(nodes);
    for (auto& v : p)
        v = uni(0.0, 1.0);
    PotentialSet pots;
    pots.unary = UnaryTable::from_probabilities(p);
    for (std::size_t a = 0; a < nodes; ++a)
        for (std::size_t b = a + 1; b < nodes; ++b)
            if (uni(0.0, 1.0) < 0.3) {
                pots.edges.emplace_back(a, b);
                pots.pairwise_weight.push_back(std::exp(-uni(0.0, 3.0)));
            }
    const std::size_t cliques = rng() % 6;
    for (std::size_t c = 0; c < cliques; ++c) {
        CliqueTerm term;
        for (std::size_t i = 0; i < nodes; ++i)
            if (uni(0.0, 1.0) < 0.35)
                term.nodes.push_back(i);
        if (term.nodes.size() < 2)
            continue;
        term.q = 0.1 * static_cast<double>(term.nodes.size());
        term.lambda_max = static_cast<double>(term.nodes.size()) * std::exp(-uni(0.0, 2.0));
        pots.cliques.push_back(std::move(term));
    }
    return pots;
}

void print_result(const char* method, const PotentialSet& pots, const SolveResult& r) {
    const EnergyBreakdown e = energy_breakdown(pots, r.labeling);
    std::cout << "method=" << method << '\n'
              << "energy=" << fmt(r.energy) << '\n'
              << "labeling=" << labeling_text(r.labeling) << '\n'
              << format_energy_breakdown(e);
}

int cmd_energy(const PotentialSet& pots, bool solve, bool brute, bool check) {
    if (!solve && !brute && !check)
        solve = true;
    if (solve) {
        const SolveResult r = minimize(pots);
        print_result("mincut", pots, r);
        std::cout << "flow=" << fmt(r.flow_value) << "\noffset=" << fmt(r.offset)
                  << "\ncertificate_gap=" << fmt(std::abs(r.energy - (r.flow_value + r.offset))) << '\n';
    }
    if (brute)
        print_result("brute-force", pots, brute_force_min(pots));
    if (check) {
        const SolveResult a = minimize(pots);
        const SolveResult b = brute_force_min(pots);
        const double diff = std::abs(a.energy - b.energy);
        std::cout << "check.mincut=" << fmt(a.energy) << "\ncheck.brute_force=" << fmt(b.energy)
                  << "\ncheck.difference=" << fmt(diff) << "\ncheck=" << (diff < 1e-9 ? "ok" : "mismatch") << '\n';
        return diff < 1e-9 ? 0 : 1;
    }
    return 0;
}

std::vector<STGraph> graphs_for(const FrameSequence& frames, const SupervoxelMap& svmap, double turnover,
                                int churn) {
    std::vector<STGraph> out;
    for (const auto& shot : split_shots(svmap, turnover, churn))
        out.push_back(build_graph(shot, shot.candidate_keyframes, svmap, frames));
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Video-context human mask inference and iterative self-training"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic video suite");
    std::string suite_name = "suite-v1";
    std::string synth_out;
    synth->add_option("--suite", suite_name, "Built-in suite name or JSON file");
    synth->add_option("--out", synth_out, "Output directory")->required();

    // supervoxel
    auto* sv = app.add_subcommand("supervoxel", "Extract supervoxels from a frame directory");
    std::string sv_in, sv_out;
    SupervoxelParams sv_params;
    sv->add_option("--in", sv_in, "Frame directory")->required();
    sv->add_option("--out", sv_out, "Output directory")->required();
    sv->add_option("--seed-grid", sv_params.seed_grid);
    sv->add_option("--color-tol", sv_params.color_tol);
    sv->add_option("--min-size", sv_params.min_size);

    // graph
    auto* graph = app.add_subcommand("graph", "Build the key-frame graphs of a video");
    std::string g_frames, g_sv;
    bool g_dump = false;
    double turnover = 0.5;
    int churn = 10;
    graph->add_option("--frames", g_frames)->required();
    graph->add_option("--supervoxels", g_sv)->required();
    graph->add_flag("--dump", g_dump, "Print node, edge and clique tables");
    graph->add_option("--shot-turnover", turnover);
    graph->add_option("--keyframe-churn", churn);

    // energy
    auto* energy = app.add_subcommand("energy", "Minimize the labeling energy of a shot or a random instance");
    std::string e_frames, e_sv, e_det, e_prop, e_model;
    int e_shot = 0;
    std::uint64_t e_random_seed = 0;
    std::size_t e_random_nodes = 12;
    bool e_solve = false, e_brute = false, e_check = false, e_no_pw = false, e_no_ho = false, e_unary = false;
    double e_thr = -1.0;
    energy->add_option("--frames", e_frames);
    energy->add_option("--supervoxels", e_sv);
    energy->add_option("--detections", e_det);
    energy->add_option("--proposals", e_prop);
    energy->add_option("--model", e_model, "Pixel model for confidence terms");
    energy->add_option("--shot", e_shot);
    auto* e_random_opt = energy->add_option("--random", e_random_seed, "Seed of a random instance instead of a video");
    energy->add_option("--nodes", e_random_nodes, "Node count of the random instance");
    energy->add_flag("--solve", e_solve);
    energy->add_flag("--brute-force", e_brute);
    energy->add_flag("--check", e_check);
    energy->add_flag("--no-pairwise", e_no_pw);
    energy->add_flag("--no-higher-order", e_no_ho);
    energy->add_flag("--unary-only", e_unary);
    energy->add_option("--det-threshold", e_thr);

    // train-model
    auto* tm = app.add_subcommand("train-model", "Train a pixel model from a corpus list");
    std::string tm_corpus, tm_out;
    TrainOptions tm_opts = PipelineConfig{}.train;
    tm->add_option("--corpus", tm_corpus, "Lines of: frame.ppm mask.pgm omega")->required();
    tm->add_option("--out", tm_out)->required();
    tm->add_option("--epochs", tm_opts.epochs);
    tm->add_option("--lr", tm_opts.lr0);
    tm->add_option("--batch", tm_opts.batch_size);
    tm->add_option("--seed", tm_opts.seed);

    // predict
    auto* pr = app.add_subcommand("predict", "Predict a confidence map for one frame");
    std::string pr_model, pr_frame, pr_out, pr_mask;
    pr->add_option("--model", pr_model)->required();
    pr->add_option("--frame", pr_frame)->required();
    pr->add_option("--out", pr_out, "Confidence as 8-bit PGM")->required();
    pr->add_option("--mask", pr_mask, "Thresholded mask output");

    // run
    auto* run = app.add_subcommand("run", "Run the iterative pipeline");
    std::string run_videos, run_out;
    PipelineConfig cfg;
    bool unary_only = false, no_pw = false, no_ho = false, no_w = false, no_neg = false;
    run->add_option("--videos", run_videos, "Manifest")->required();
    run->add_option("--out", run_out)->required();
    run->add_option("--iters", cfg.iterations);
    run->add_option("--seed", cfg.seed);
    run->add_flag("--no-pairwise", no_pw);
    run->add_flag("--no-higher-order", no_ho);
    run->add_flag("--unary-only", unary_only);
    run->add_flag("--no-sample-weights", no_w);
    run->add_flag("--no-negatives", no_neg);
    run->add_option("--det-threshold", cfg.det_threshold);
    run->add_option("--max-per-video", cfg.max_per_video);
    run->add_option("--negative-fraction", cfg.negative_fraction);
    run->add_option("--early-stop", cfg.early_stop_points, "IoU points; negative disables");
    run->add_option("--epochs", cfg.train.epochs);
    run->add_option("--lr", cfg.train.lr0);
    run->add_option("--threads", cfg.threads);

    // iou
    auto* iou = app.add_subcommand("iou", "IoU of two masks");
    std::string iou_a, iou_b;
    iou->add_option("a", iou_a)->required();
    iou->add_option("b", iou_b)->required();

    // overlay
    auto* ov = app.add_subcommand("overlay", "Draw a mask boundary on a frame");
    std::string ov_frame, ov_mask, ov_out;
    ov->add_option("--frame", ov_frame)->required();
    ov->add_option("--mask", ov_mask)->required();
    ov->add_option("--out", ov_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            const fs::path manifest = write_suite(load_suite(suite_name), synth_out);
            std::cout << "manifest=" << manifest.string() << '\n';
        } else if (*sv) {
            const SupervoxelMap map = extract_supervoxels(read_frame_sequence(sv_in), sv_params);
            write_supervoxels(sv_out, map);
            std::cout << "supervoxels=" << map.id_count() << '\n';
        } else if (*graph) {
            const FrameSequence frames = read_frame_sequence(g_frames);
            const auto graphs = graphs_for(frames, read_supervoxels(g_sv), turnover, churn);
            for (std::size_t s = 0; s < graphs.size(); ++s) {
                std::cout << "shot " << s << " keyframes=" << graphs[s].keyframes.size()
                          << " nodes=" << graphs[s].nodes.size() << " edges=" << graphs[s].edges.size()
                          << " cliques=" << graphs[s].cliques.size() << '\n';
                if (g_dump)
                    std::cout << dump_graph(graphs[s]);
            }
        } else if (*energy) {
            PotentialSet pots;
            if (*e_random_opt) {
                pots = random_instance(e_random_seed, e_random_nodes);
            } else {
                if (e_frames.empty() || e_sv.empty() || e_det.empty() || e_prop.empty())
                    throw InvalidArgument("energy: need --frames, --supervoxels, --detections, --proposals or --random");
                const FrameSequence frames = read_frame_sequence(e_frames);
                const auto graphs = graphs_for(frames, read_supervoxels(e_sv), turnover, churn);
                if (e_shot < 0 || e_shot >= static_cast<int>(graphs.size()))
                    throw InvalidArgument("energy: shot out of range");
                const STGraph& g = graphs[static_cast<std::size_t>(e_shot)];
                const auto dets = read_detections(e_det);
                const auto props = read_proposals(e_prop);
                std::optional<PixelModel> model;
                if (!e_model.empty())
                    model = load_model(e_model);
                std::map<int, BinaryMask> masks;
                std::map<int, ConfidenceMap> confs;
                for (int k : g.keyframes) {
                    const ConfidenceMap* conf = nullptr;
                    if (model)
                        conf = &confs.emplace(k, predict_confidence(*model, frames[k])).first->second;
                    masks.emplace(k, build_proposal_mask(k, frames.width(), frames.height(), dets, props, conf,
                                                         e_thr));
                }
                pots = build_potentials(g, masks, model ? &confs : nullptr, !(e_no_pw || e_unary),
                                        !(e_no_ho || e_unary));
            }
            std::cout << "nodes=" << pots.node_count() << "\nedges=" << pots.edges.size()
                      << "\ncliques=" << pots.cliques.size() << '\n';
            if (e_brute && pots.node_count() > kBruteForceMaxNodes)
                throw InvalidArgument("energy: too many nodes for brute force");
            return cmd_energy(pots, e_solve, e_brute, e_check);
        } else if (*tm) {
            std::istringstream in(read_text_file(tm_corpus));
            const fs::path base = fs::path(tm_corpus).parent_path();
            std::vector<WeightedSample> samples;
            std::string frame, mask;
            double omega = 0.0;
            while (in >> frame >> mask >> omega) {
                auto img = std::make_shared<const RgbImage>(read_ppm(base / frame));
                samples.push_back({img, read_mask(base / mask), omega});
            }
            const PixelModel model = train(samples, tm_opts);
            save_model(tm_out, model);
            std::cout << "samples=" << samples.size() << "\nfinal_loss=" << fmt(model.loss_log.back()) << '\n';
        } else if (*pr) {
            const PixelModel model = load_model(pr_model);
            const RgbImage frame = read_ppm(pr_frame);
            const ConfidenceMap conf = predict_confidence(model, frame);
            Raster<std::uint8_t> gray(conf.width(), conf.height());
            BinaryMask m(conf.width(), conf.height());
            for (std::size_t p = 0; p < conf.size(); ++p) {
                gray[p] = static_cast<std::uint8_t>(std::lround(conf[p] * 255.0));
                m[p] = conf[p] > 0.5 ? 1 : 0;
            }
            write_pgm8(pr_out, gray);
            if (!pr_mask.empty())
                write_mask(pr_mask, m);
        } else if (*run) {
            cfg.use_pairwise = !(no_pw || unary_only);
            cfg.use_higher_order = !(no_ho || unary_only);
            cfg.use_sample_weights = !no_w;
            cfg.use_negatives = !no_neg;
            const VideoSet set = read_manifest(run_videos);
            std::vector<LoadedVideo> videos;
            for (const auto& d : set.videos)
                videos.push_back(load_video(d, cfg));
            const fs::path out(run_out);
            const RunResult result = run_iterations(videos, cfg, &out);
            RunReport report{result.reports, config_echo(cfg), dataset_hash(set)};
            emit_report(report, out / "report.txt");
            emit_curves(report, out / "curves.csv");
            save_model(out / "model.pxm", result.final_model);
            for (const auto& it : result.reports)
                std::cout << "iteration " << it.iteration << " eval_iou=" << fmt(it.eval_iou)
                          << " corpus=" << it.corpus_size << " negatives=" << it.negative_count << '\n';
        } else if (*iou) {
            std::cout << fmt(compute_iou(read_mask(iou_a), read_mask(iou_b))) << '\n';
        } else if (*ov) {
            emit_overlay(read_ppm(ov_frame), read_mask(ov_mask), ov_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "svseg: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
