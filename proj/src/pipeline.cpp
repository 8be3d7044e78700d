#include "svseg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "svseg/error.hpp"
#include "svseg/solver.hpp"

namespace fs = std::filesystem;

namespace svseg {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos)
            break;
        start = tab + 1;
    }
    return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

void fnv(std::uint64_t& h, const std::string& bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
}

void hash_path(std::uint64_t& h, const fs::path& p) {
    if (p.empty())
        return;
    if (fs::is_directory(p)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(p))
            if (e.is_regular_file())
                files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            fnv(h, f.filename().string());
            fnv(h, read_text_file(f));
        }
    } else {
        fnv(h, p.filename().string());
        fnv(h, read_text_file(p));
    }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::string iteration_dir(int t) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "iter_%02d", t);
    return buf;
}

std::string mask_name(int t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "mask_%05d.pgm", t);
    return buf;
}

template <class F>
void for_each_index(std::size_t n, unsigned threads, F&& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < std::min<std::size_t>(threads, n); ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& th : pool)
        th.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace

VideoSet read_manifest(const fs::path& path) {
    std::istringstream in(read_text_file(path));
    const fs::path base = path.parent_path();
    VideoSet set;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line.front() == '#')
            continue;
        const auto cols = split_tabs(line);
        if (cols.size() != 7)
            throw ParseError("manifest: expected 7 tab-separated columns", lineno);
        VideoDescriptor d;
        d.name = cols[0];
        d.split = cols[1];
        if (d.split != "train" && d.split != "eval")
            throw ParseError("manifest: split must be train or eval", lineno);
        d.frames_dir = resolve(base, cols[2]);
        d.supervoxel_dir = resolve(base, cols[3]);
        d.detections = resolve(base, cols[4]);
        d.proposals = resolve(base, cols[5]);
        if (cols[6] != "-")
            d.gt_dir = resolve(base, cols[6]);
        set.videos.push_back(std::move(d));
    }
    if (set.videos.empty())
        throw FormatError("manifest lists no videos: " + path.string());
    return set;
}

std::uint64_t dataset_hash(const VideoSet& videos) {
    std::uint64_t h = kFnvOffset;
    for (const auto& d : videos.videos) {
        fnv(h, d.name + '\t' + d.split + '\n');
        hash_path(h, d.frames_dir);
        hash_path(h, d.supervoxel_dir);
        hash_path(h, d.detections);
        hash_path(h, d.proposals);
        hash_path(h, d.gt_dir);
    }
    return h;
}

std::shared_ptr<const RgbImage> LoadedVideo::frame_handle(int t) const {
    return std::shared_ptr<const RgbImage>(frames, &(*frames)[t]);
}

LoadedVideo load_video(const VideoDescriptor& desc, const PipelineConfig& config) {
    LoadedVideo v;
    v.desc = desc;
    v.frames = std::make_shared<const FrameSequence>(read_frame_sequence(desc.frames_dir));
    const int w = v.frames->width(), h = v.frames->height(), n = v.frames->size();
    const std::string where = "video '" + desc.name + "': ";
    v.svmap = read_supervoxels(desc.supervoxel_dir);
    if (v.svmap.width() != w || v.svmap.height() != h || v.svmap.frame_count() != n)
        throw FormatError(where + "supervoxel map does not match the frames");
    v.detections = read_detections(desc.detections);
    for (const auto& d : v.detections)
        if (d.frame_index >= n || d.box.x1 >= w || d.box.y1 >= h)
            throw FormatError(where + "detection outside the video");
    v.proposals = read_proposals(desc.proposals);
    for (const auto& [t, list] : v.proposals) {
        if (t >= n)
            throw FormatError(where + "proposal frame outside the video");
        for (const auto& p : list)
            if (p.mask.width() != w || p.mask.height() != h)
                throw FormatError(where + "proposal size does not match the frames");
    }
    if (!desc.gt_dir.empty()) {
        for (int t = 0; t < n; ++t) {
            BinaryMask m = read_mask(desc.gt_dir / mask_name(t));
            if (m.width() != w || m.height() != h)
                throw FormatError(where + "ground-truth size does not match the frames");
            v.ground_truth.push_back(std::move(m));
        }
    }
    v.shots = split_shots(v.svmap, config.shot_turnover, config.keyframe_churn);
    if (v.shots.empty())
        throw FormatError(where + "no shots");
    for (const auto& shot : v.shots)
        v.graphs.push_back(build_graph(shot, shot.candidate_keyframes, v.svmap, *v.frames));
    return v;
}

VideoInference infer_masks(const LoadedVideo& video, const PixelModel* model, const PipelineConfig& config) {
    if (video.shots.empty())
        throw InvalidArgument("infer_masks: video has no shots");
    VideoInference out;
    const int w = video.frames->width(), h = video.frames->height();
    for (const STGraph& graph : video.graphs) {
        std::map<int, BinaryMask> masks;
        std::map<int, ConfidenceMap> confs;
        for (int k : graph.keyframes) {
            const ConfidenceMap* conf = nullptr;
            if (model) {
                conf = &confs.emplace(k, predict_confidence(*model, (*video.frames)[k])).first->second;
            }
            masks.emplace(k, build_proposal_mask(k, w, h, video.detections, video.proposals, conf,
                                                 config.det_threshold));
        }
        const PotentialSet pots = build_potentials(graph, masks, model ? &confs : nullptr, config.use_pairwise,
                                                   config.use_higher_order);
        const SolveResult res = minimize(pots);
        out.max_certificate_gap =
            std::max(out.max_certificate_gap, std::abs(res.energy - (res.flow_value + res.offset)));
        ++out.solves;

        for (int k : graph.keyframes) {
            KeyframeResult kr;
            kr.frame = k;
            kr.mask = BinaryMask(w, h);
            double quality = 0.0;
            for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
                const Node& node = graph.nodes[i];
                if (node.frame != k || res.labeling[i] != Label::Human)
                    continue;
                for (std::size_t p : node.pixels)
                    kr.mask[p] = 1;
                quality += model ? mean_confidence(node.pixels, confs.at(k)) : pots.unary.probability[i];
                ++kr.human_nodes;
            }
            kr.omega = kr.human_nodes ? quality / static_cast<double>(kr.human_nodes) : 0.0;
            out.keyframes.push_back(std::move(kr));
        }
    }
    std::sort(out.keyframes.begin(), out.keyframes.end(),
              [](const KeyframeResult& a, const KeyframeResult& b) { return a.frame < b.frame; });
    return out;
}

std::vector<int> zero_detection_frames(const LoadedVideo& video, double det_threshold) {
    std::vector<bool> detected(static_cast<std::size_t>(video.frames->size()), false);
    for (const auto& d : video.detections)
        if (d.score > det_threshold)
            detected[static_cast<std::size_t>(d.frame_index)] = true;
    std::vector<int> out;
    for (std::size_t t = 0; t < detected.size(); ++t)
        if (!detected[t])
            out.push_back(static_cast<int>(t));
    return out;
}

std::size_t negative_count_for(std::size_t positives, double negative_fraction) {
    if (!(negative_fraction >= 0.0 && negative_fraction < 1.0))
        throw InvalidArgument("negative_fraction must be in [0, 1)");
    return static_cast<std::size_t>(std::llround(static_cast<double>(positives) * negative_fraction /
                                                 (1.0 - negative_fraction)));
}

TrainingCorpus select_training_frames(const std::vector<VideoInference>& results,
                                      const std::vector<NegativeCandidate>& negatives_pool,
                                      const std::vector<std::pair<int, int>>& frame_sizes, int max_per_video,
                                      double negative_fraction, std::uint64_t seed) {
    if (results.empty())
        throw InvalidArgument("select_training_frames: no results");
    if (max_per_video < 0)
        throw InvalidArgument("select_training_frames: max_per_video < 0");
    TrainingCorpus corpus;
    for (std::size_t v = 0; v < results.size(); ++v) {
        std::vector<const KeyframeResult*> ranked;
        for (const auto& kr : results[v].keyframes)
            if (kr.omega > 0.0)
                ranked.push_back(&kr);
        std::stable_sort(ranked.begin(), ranked.end(), [](const KeyframeResult* a, const KeyframeResult* b) {
            return a->omega != b->omega ? a->omega > b->omega : a->frame < b->frame;
        });
        ranked.resize(std::min(ranked.size(), static_cast<std::size_t>(max_per_video)));
        for (const KeyframeResult* kr : ranked)
            corpus.push_back({v, kr->frame, kr->mask, kr->omega, false});
    }

    std::size_t want = std::min(negative_count_for(corpus.size(), negative_fraction), negatives_pool.size());
    if (corpus.empty() && negative_fraction > 0.0)
        want = 0;
    std::vector<std::size_t> order(negatives_pool.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < want; ++i)
        std::swap(order[i], order[i + static_cast<std::size_t>(rng() % (order.size() - i))]);
    order.resize(want);
    std::sort(order.begin(), order.end());
    for (std::size_t i : order) {
        const NegativeCandidate& c = negatives_pool[i];
        const auto [w, h] = frame_sizes.at(c.video);
        corpus.push_back({c.video, c.frame, BinaryMask(w, h), 1.0, true});
    }
    if (corpus.empty())
        throw InvalidArgument("select_training_frames: empty corpus");
    return corpus;
}

double evaluate(const PixelModel& model, const std::vector<const LoadedVideo*>& eval_videos) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const LoadedVideo* v : eval_videos) {
        if (v->ground_truth.empty())
            throw InvalidArgument("evaluate: video '" + v->desc.name + "' has no ground truth");
        for (int t = 0; t < v->frames->size(); ++t) {
            const ConfidenceMap conf = predict_confidence(model, (*v->frames)[t]);
            BinaryMask pred(conf.width(), conf.height());
            for (std::size_t p = 0; p < conf.size(); ++p)
                pred[p] = conf[p] > 0.5 ? 1 : 0;
            sum += compute_iou(pred, v->ground_truth[static_cast<std::size_t>(t)]);
            ++count;
        }
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

RunResult run_iterations(const std::vector<LoadedVideo>& videos, const PipelineConfig& config,
                         const fs::path* out_dir) {
    if (config.iterations < 1)
        throw InvalidArgument("run_iterations: iterations must be >= 1");
    std::vector<const LoadedVideo*> train_videos, eval_videos;
    for (const auto& v : videos)
        (v.desc.split == "eval" ? eval_videos : train_videos).push_back(&v);
    if (train_videos.empty())
        throw InvalidArgument("run_iterations: no training videos");

    std::vector<NegativeCandidate> pool;
    std::vector<std::pair<int, int>> sizes;
    for (std::size_t i = 0; i < train_videos.size(); ++i) {
        sizes.emplace_back(train_videos[i]->frames->width(), train_videos[i]->frames->height());
        if (config.use_negatives)
            for (int t : zero_detection_frames(*train_videos[i], config.det_threshold))
                pool.push_back({i, t});
    }
    const unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());

    RunResult result;
    std::optional<PixelModel> model;
    std::optional<Standardizer> frozen;
    for (int t = 1; t <= config.iterations; ++t) {
        std::vector<VideoInference> inferred(train_videos.size());
        for_each_index(train_videos.size(), threads, [&](std::size_t i) {
            inferred[i] = infer_masks(*train_videos[i], model ? &*model : nullptr, config);
        });

        const TrainingCorpus corpus =
            select_training_frames(inferred, pool, sizes, config.max_per_video,
                                   config.use_negatives ? config.negative_fraction : 0.0,
                                   mix_seed(config.seed, 0x6e6567));

        IterationReport rep;
        rep.iteration = t;
        std::vector<WeightedSample> samples;
        double omega_sum = 0.0;
        std::size_t positives = 0;
        for (const auto& f : corpus) {
            const double omega = f.negative || config.use_sample_weights ? f.omega : 1.0;
            samples.push_back({train_videos[f.video]->frame_handle(f.frame), f.mask, omega});
            if (f.negative) {
                ++rep.negative_count;
            } else {
                omega_sum += f.omega;
                ++positives;
            }
        }
        rep.corpus_size = corpus.size();
        rep.mean_omega = positives ? omega_sum / static_cast<double>(positives) : 0.0;
        for (std::size_t i = 0; i < train_videos.size(); ++i) {
            VideoSelection sel;
            sel.name = train_videos[i]->desc.name;
            for (const auto& kr : inferred[i].keyframes) {
                sel.frames.push_back(kr.frame);
                sel.omegas.push_back(kr.omega);
                sel.selected.push_back(std::any_of(corpus.begin(), corpus.end(), [&](const TrainingFrame& f) {
                    return !f.negative && f.video == i && f.frame == kr.frame;
                }));
            }
            rep.videos.push_back(std::move(sel));
            rep.max_certificate_gap = std::max(rep.max_certificate_gap, inferred[i].max_certificate_gap);
            rep.solves += inferred[i].solves;
        }

        TrainOptions opts = config.train;
        opts.seed = mix_seed(config.seed, static_cast<std::uint64_t>(t));
        opts.frozen_standardizer = frozen ? &*frozen : nullptr;
        model = train(samples, opts);
        if (!frozen)
            frozen = model->standardizer;
        rep.loss_curve = model->loss_log;
        rep.eval_iou = eval_videos.empty() ? 0.0 : evaluate(*model, eval_videos);

        if (out_dir) {
            const fs::path dir = *out_dir / iteration_dir(t);
            for (std::size_t i = 0; i < train_videos.size(); ++i)
                for (const auto& kr : inferred[i].keyframes)
                    write_mask(dir / "masks" / train_videos[i]->desc.name / mask_name(kr.frame), kr.mask);
            save_model(dir / "model.pxm", *model);
        }

        const double previous = result.reports.empty() ? 0.0 : result.reports.back().eval_iou;
        const bool stop = !result.reports.empty() && config.early_stop_points >= 0.0 &&
                          (rep.eval_iou - previous) * 100.0 < config.early_stop_points;
        result.reports.push_back(std::move(rep));
        if (stop)
            break;
    }
    result.final_model = *model;
    return result;
}

} // namespace svseg
