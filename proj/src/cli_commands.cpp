#include "chunksr/cli_commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "chunksr/codec.hpp"
#include "chunksr/image_io.hpp"
#include "chunksr/threadpool.hpp"
#include "json.hpp"

namespace chunksr::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string chunk_delta_name(int chunk_id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "chunk_%03d.srd", chunk_id);
    return buf;
}

void setup_threads(const RunConfig& cfg) {
    int n = cfg.threads;
    if (n <= 0) {
        n = static_cast<int>(std::thread::hardware_concurrency());
        if (n < 1) n = 1;
    }
    ThreadPool::instance().set_threads(n);
}

fs::path out_dir(const RunConfig& cfg) {
    return cfg.out_dir.empty() ? fs::path(default_out_dir())
                               : fs::path(cfg.out_dir);
}

std::string hex64(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(v));
    return buf;
}

std::vector<meta::MetaTask> load_tasks(const fs::path& dir, int scale) {
    if (!fs::is_directory(dir)) {
        throw std::runtime_error("meta task directory does not exist: " +
                                 dir.string());
    }
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_directory()) names.push_back(e.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    std::vector<meta::MetaTask> tasks;
    for (const auto& n : names) {
        tasks.push_back({n, data::FrameSet::open_dir(dir / n, scale)});
    }
    if (tasks.empty()) {
        throw std::runtime_error("no task subdirectories in " + dir.string());
    }
    return tasks;
}

ModelParams load_init_model(const RunConfig& cfg) {
    fs::path path;
    if (!cfg.model_path.empty()) {
        path = cfg.model_path;
    } else if (!cfg.models_dir.empty()) {
        path = fs::path(cfg.models_dir) / (cfg.init + ".srm");
    } else {
        throw std::runtime_error("no model given (use --model or --models)");
    }
    return codec::read_model(path);
}

// group-aware chunk chains; restarts from the shared model at group starts
struct ChainPlan {
    std::vector<std::vector<int>> groups;  // chunk ids per group
};

ChainPlan plan_chains(const data::ChunkManifest& manifest, int chunks_limit) {
    ChainPlan plan;
    const int limit = chunks_limit > 0
                          ? std::min<int>(chunks_limit,
                                          static_cast<int>(
                                              manifest.chunks.size()))
                          : static_cast<int>(manifest.chunks.size());
    for (const auto& g : manifest.groups) {
        std::vector<int> ids;
        for (int c = g.begin; c < g.end && c < limit; ++c) ids.push_back(c);
        if (!ids.empty()) plan.groups.push_back(std::move(ids));
    }
    return plan;
}

void dump_map(const sampler::PsnrMap& map, const fs::path& path) {
    std::ostringstream out;
    for (int r = 0; r < map.rows; ++r) {
        for (int c = 0; c < map.cols; ++c) {
            if (c) out << ",";
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.4f", map.at(r, c));
            out << buf;
        }
        out << "\n";
    }
    codec::atomic_write(path, out.str());
}

}  // namespace

std::string default_out_dir() {
    const char* env = std::getenv("CHUNKSR_OUT_DIR");
    return env && *env ? env : ".";
}

void apply_preset(RunConfig& cfg) {
    if (cfg.preset == "custom") return;
    if (cfg.preset == "S") {
        cfg.ac.epochs = 0.1;
        cfg.ac.p1 = 20.0;
        cfg.ac.p2 = 1.0;
    } else if (cfg.preset == "M") {
        cfg.ac.epochs = 3.0;
        cfg.ac.p1 = 20.0;
        cfg.ac.p2 = 1.0;
    } else if (cfg.preset == "L") {
        cfg.ac.epochs = 3.0;
        cfg.ac.p1 = 100.0;
        cfg.ac.p2 = 1.0;
    } else {
        throw std::invalid_argument("unknown preset '" + cfg.preset +
                                    "' (expected S, M, L or custom)");
    }
}

int cmd_synth(const RunConfig& cfg) {
    const fs::path out = out_dir(cfg);
    if (cfg.synth_kind == "video") {
        synth::VideoSpec spec = cfg.video;
        spec.seed = cfg.seed == 0 ? spec.seed : cfg.seed;
        synth::video(out, spec);
        std::cout << "wrote " << spec.frames_per_chunk * spec.chunks
                  << " frames to " << out.string() << "\n";
    } else if (cfg.synth_kind == "meta") {
        synth::meta_tasks(out, cfg.synth_tasks, cfg.synth_frames,
                          cfg.synth_width, cfg.synth_height, cfg.seed + 1);
        std::cout << "wrote " << cfg.synth_tasks << " tasks to " << out.string()
                  << "\n";
    } else if (cfg.synth_kind == "images") {
        synth::still_images(out, cfg.synth_count, cfg.synth_width,
                            cfg.synth_height, cfg.seed + 2);
        std::cout << "wrote " << cfg.synth_count << " images to "
                  << out.string() << "\n";
    } else {
        throw std::invalid_argument("unknown synth kind '" + cfg.synth_kind +
                                    "'");
    }
    return 0;
}

int cmd_ingest(const RunConfig& cfg) {
    if (cfg.frames_dir.empty()) {
        throw std::invalid_argument("ingest: --frames is required");
    }
    data::ChunkManifest m =
        data::ingest(cfg.frames_dir, cfg.fps, cfg.scale, cfg.iframe_sidecar);
    data::chunkify(m, cfg.chunk_seconds);
    if (cfg.iframes_per_group > 0) {
        data::group_long_video(m, cfg.iframes_per_group);
    }
    const fs::path path = out_dir(cfg) / "manifest.txt";
    data::write_manifest(m, path);
    std::cout << "manifest: " << m.frame_count() << " frames, "
              << m.chunks.size() << " chunks, " << m.iframes.size()
              << " I-frames, " << m.groups.size() << " groups -> "
              << path.string() << "\n";
    return 0;
}

int cmd_meta_train(const RunConfig& cfg) {
    setup_threads(cfg);
    if (cfg.meta_dir.empty()) {
        throw std::invalid_argument("meta-train: --meta-dir is required");
    }
    const fs::path out = out_dir(cfg);
    const ArchId arch = arch_from_string(cfg.arch);

    ModelParams base = build_model(arch, cfg.scale, cfg.seed);
    std::ostringstream pretrain_log;
    if (!cfg.pretrain_dir.empty()) {
        meta::MetaTask images{"pretrain",
                              data::FrameSet::open_dir(cfg.pretrain_dir,
                                                       cfg.scale)};
        meta::PretrainConfig pc = cfg.pc;
        pc.seed = cfg.seed;
        pc.patch_size = cfg.mc.patch_size;
        pc.batch_size = cfg.mc.batch_size_per_task;
        base = meta::pretrain(base, images, pc, &pretrain_log);
    } else {
        base.provenance = Provenance::pretrained;
    }
    codec::write_model(base, out / "pretrained.srm");
    codec::atomic_write(out / "pretrain_log.txt", pretrain_log.str());

    const auto tasks = load_tasks(cfg.meta_dir, cfg.scale);
    meta::MetaConfig mc = cfg.mc;
    mc.seed = cfg.seed;
    if (mc.tasks_per_iter > static_cast<int>(tasks.size())) {
        mc.tasks_per_iter = static_cast<int>(tasks.size());
    }
    std::ostringstream meta_log;
    const ModelParams meta_model = meta::meta_train(base, tasks, mc, &meta_log);
    codec::write_model(meta_model, out / "meta.srm");
    codec::atomic_write(out / "meta_train_log.txt", meta_log.str());
    std::cout << "meta model: " << (out / "meta.srm").string() << " (P = "
              << meta_model.theta.size() << ")\n";
    return 0;
}

int cmd_adapt(const RunConfig& cfg) {
    setup_threads(cfg);
    if (cfg.manifest_path.empty()) {
        throw std::invalid_argument("adapt: --manifest is required");
    }
    const fs::path out = out_dir(cfg);
    data::ChunkManifest manifest = data::read_manifest(cfg.manifest_path);
    if (cfg.iframes_per_group > 0) {
        data::group_long_video(manifest, cfg.iframes_per_group);
    }
    auto frames = data::FrameSet::open(manifest);
    const ModelParams init_model = load_init_model(cfg);
    if (static_cast<int>(init_model.arch.scale) != manifest.scale) {
        throw std::runtime_error(
            "adapt: model scale x" + std::to_string(init_model.arch.scale) +
            " does not match manifest scale x" +
            std::to_string(manifest.scale));
    }

    adapt::AdaptConfig ac = cfg.ac;
    ac.seed = cfg.seed;
    sampler::SamplerConfig sc = cfg.sc;
    sc.patch_size = ac.patch_size;

    std::vector<sampler::PsnrMap> all_maps;
    adapt::PairProvider provider;
    if (cfg.no_cps) {
        provider = [&](int chunk_id, const ModelParams&) {
            return sampler::collect_pairs_all(*frames, manifest, chunk_id,
                                              ac.patch_size);
        };
    } else {
        provider = [&](int chunk_id, const ModelParams& ref) {
            auto pairs = sampler::collect_pairs_cps(ref, *frames, manifest,
                                                    chunk_id, sc);
            for (const auto& m : pairs.maps) all_maps.push_back(m);
            return pairs;
        };
    }

    const ChainPlan plan = plan_chains(manifest, cfg.chunks_limit);
    std::vector<adapt::ChunkReport> report;
    std::vector<codec::SparseDelta> deltas;
    size_t total_private = 0;
    for (const auto& group_ids : plan.groups) {
        const adapt::EmtResult res =
            adapt::emt_run(init_model, group_ids, ac, provider);
        total_private += res.total_private_params;
        for (size_t i = 0; i < res.deltas.size(); ++i) {
            codec::write_delta(res.deltas[i],
                               out / chunk_delta_name(group_ids[i]));
            deltas.push_back(res.deltas[i]);
        }
        for (const auto& r : res.report) report.push_back(r);
    }

    // delimited report: one row per chunk
    std::ostringstream rep;
    rep << "chunk_id,mask_size,steps,final_train_psnr_db,elapsed_ms\n";
    for (const auto& r : report) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%d,%zu,%d,%.4f,%lld\n", r.chunk_id,
                      r.mask_size, r.steps, r.train_psnr_db,
                      static_cast<long long>(r.elapsed_ms));
        rep << buf;
    }
    codec::atomic_write(out / "adapt_report.csv", rep.str());

    std::ostringstream hashes;
    hashes << "chunk_id,model_hash\n";
    for (const auto& r : report) {
        hashes << r.chunk_id << "," << hex64(r.model_hash) << "\n";
    }
    codec::atomic_write(out / "model_hashes.csv", hashes.str());

    const size_t P = init_model.theta.size();
    const auto storage = codec::storage_report(deltas, P);
    const double frac =
        static_cast<double>(total_private) / static_cast<double>(P);
    std::ostringstream st;
    char line[256];
    std::snprintf(line, sizeof(line), "param_count %zu\n", P);
    st << line;
    std::snprintf(line, sizeof(line), "private_params %zu\n", total_private);
    st << line;
    std::snprintf(line, sizeof(line), "private_fraction %.2fP\n", frac);
    st << line;
    std::snprintf(line, sizeof(line), "delta_entries %zu\n",
                  storage.total_entries);
    st << line;
    std::snprintf(line, sizeof(line), "delta_entries_fraction %.2fP\n",
                  storage.fraction_of_p);
    st << line;
    std::snprintf(line, sizeof(line), "delta_bytes %zu\n", storage.total_bytes);
    st << line;
    codec::atomic_write(out / "storage_report.txt", st.str());

    json summary;
    summary["param_count"] = P;
    summary["private_params"] = total_private;
    summary["private_fraction_of_p"] = frac;
    summary["delta_entries"] = storage.total_entries;
    summary["delta_bytes"] = storage.total_bytes;
    summary["chunks"] = json::array();
    for (const auto& r : report) {
        summary["chunks"].push_back({{"chunk_id", r.chunk_id},
                                     {"mask_size", r.mask_size},
                                     {"steps", r.steps},
                                     {"train_psnr_db", r.train_psnr_db},
                                     {"pairs", r.pair_count},
                                     {"candidate_cells", r.candidate_cells},
                                     {"selected_cells", r.selected_cells},
                                     {"forward_count", r.forward_count},
                                     {"model_hash", hex64(r.model_hash)}});
    }
    codec::atomic_write(out / "adapt_summary.json", summary.dump(2) + "\n");

    if (!cfg.dump_psnr_maps.empty()) {
        for (const auto& m : all_maps) {
            char name[48];
            std::snprintf(name, sizeof(name), "psnr_map_%05d.csv", m.frame_id);
            dump_map(m, fs::path(cfg.dump_psnr_maps) / name);
        }
    }

    std::printf("adapted %zu chunks, private parameters %zu (%.2fP)\n",
                report.size(), total_private, frac);
    return 0;
}

int cmd_apply(const RunConfig& cfg) {
    setup_threads(cfg);
    if (cfg.manifest_path.empty()) {
        throw std::invalid_argument("apply: --manifest is required");
    }
    const fs::path out = out_dir(cfg);
    const data::ChunkManifest manifest =
        data::read_manifest(cfg.manifest_path);
    auto frames = data::FrameSet::open(manifest);
    const ModelParams shared = load_init_model(cfg);

    // collect deltas by chunk id
    std::vector<std::optional<codec::SparseDelta>> deltas(
        manifest.chunks.size());
    if (!cfg.deltas_dir.empty() && fs::is_directory(cfg.deltas_dir)) {
        for (const auto& e : fs::directory_iterator(cfg.deltas_dir)) {
            if (e.path().extension() != ".srd") continue;
            codec::SparseDelta d = codec::read_delta(e.path());
            if (d.chunk_id >= 0 &&
                d.chunk_id < static_cast<int>(deltas.size())) {
                deltas[d.chunk_id] = std::move(d);
            }
        }
    }

    // reconstruct the per-chunk models chain by chain
    std::vector<ModelParams> chunk_models(manifest.chunks.size());
    std::ostringstream hashes;
    hashes << "chunk_id,model_hash\n";
    for (const auto& g : manifest.groups) {
        ModelParams current = shared;
        for (int c = g.begin; c < g.end; ++c) {
            if (deltas[static_cast<size_t>(c)]) {
                current =
                    codec::apply_delta(current, *deltas[static_cast<size_t>(c)]);
                hashes << c << "," << hex64(codec::params_hash(current.theta))
                       << "\n";
            }
            chunk_models[static_cast<size_t>(c)] = current;
        }
    }
    codec::atomic_write(out / "apply_hashes.csv", hashes.str());

    const fs::path sr_dir = out / "sr";
    fs::create_directories(sr_dir);
    for (int c = 0; c < static_cast<int>(manifest.chunks.size()); ++c) {
        const auto& range = manifest.chunks[c];
        for (int f = range.begin; f < range.end; ++f) {
            const Tensor sr = forward(chunk_models[c], frames->lr(f));
            img::write_png(img::from_tensor(sr), sr_dir / manifest.files[f]);
        }
    }
    std::cout << "super-resolved " << manifest.frame_count() << " frames -> "
              << sr_dir.string() << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
    setup_threads(cfg);
    if (cfg.manifest_path.empty() || cfg.sr_dir.empty()) {
        throw std::invalid_argument("evaluate: --manifest and --sr are "
                                    "required");
    }
    const fs::path out = out_dir(cfg);
    const data::ChunkManifest manifest =
        data::read_manifest(cfg.manifest_path);
    auto frames = data::FrameSet::open(manifest);
    const fs::path sr_dir = cfg.sr_dir;
    size_t sr_count = 0;
    for (const auto& e : fs::directory_iterator(sr_dir)) {
        if (e.is_regular_file()) ++sr_count;
    }
    if (sr_count != manifest.files.size()) {
        throw std::runtime_error(
            "evaluate: frame count mismatch (SR " + std::to_string(sr_count) +
            " vs HR " + std::to_string(manifest.files.size()) + ")");
    }

    std::vector<double> frame_psnr(manifest.files.size(), 0.0);
    ThreadPool::instance().parallel_for(
        manifest.files.size(), [&](size_t f) {
            const Tensor hr = frames->hr(static_cast<int>(f));
            const img::ImageU8 sr_img =
                img::read_image(sr_dir / manifest.files[f]);
            const Tensor sr = img::to_tensor(sr_img);
            require_same_shape(sr, hr, "evaluate");
            // PSNR on RGB in [0, 1], frame average convention
            frame_psnr[f] = ops::psnr(sr, hr, 1.0);
        });

    std::ostringstream rep;
    rep << "chunk_id,frames,mean_psnr_db\n";
    json summary;
    summary["per_chunk"] = json::array();
    double overall = 0.0;
    for (size_t c = 0; c < manifest.chunks.size(); ++c) {
        const auto& range = manifest.chunks[c];
        double mean = 0.0;
        for (int f = range.begin; f < range.end; ++f) mean += frame_psnr[f];
        mean /= std::max(1, range.end - range.begin);
        char buf[80];
        std::snprintf(buf, sizeof(buf), "%zu,%d,%.4f\n", c,
                      range.end - range.begin, mean);
        rep << buf;
        summary["per_chunk"].push_back({{"chunk_id", c},
                                        {"frames", range.end - range.begin},
                                        {"mean_psnr_db", mean}});
    }
    for (double v : frame_psnr) overall += v;
    overall /= static_cast<double>(frame_psnr.size());
    char buf[80];
    std::snprintf(buf, sizeof(buf), "overall,%zu,%.4f\n", frame_psnr.size(),
                  overall);
    rep << buf;
    codec::atomic_write(out / "evaluate_report.csv", rep.str());

    summary["overall_psnr_db"] = overall;
    summary["frames"] = frame_psnr.size();
    codec::atomic_write(out / "evaluate_summary.json", summary.dump(2) + "\n");
    std::printf("overall PSNR %.4f dB over %zu frames\n", overall,
                frame_psnr.size());
    return 0;
}

int main_cli(int argc, const char* const* argv) {
    RunConfig cfg;
    CLI::App app{"per-chunk content-aware super-resolution toolkit"};
    app.require_subcommand(1);

    app.add_option("--threads", cfg.threads, "worker threads (0 = auto)");
    app.add_option("--seed", cfg.seed, "root RNG seed");
    app.add_option("--out", cfg.out_dir, "output directory");

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--arch", cfg.arch, "espcn | srcnn | edsr1");
        sub->add_option("--scale", cfg.scale, "SR factor (2, 3 or 4)");
        sub->add_option("--seed", cfg.seed, "root RNG seed");
        sub->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
        sub->add_option("--out", cfg.out_dir, "output directory");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate synthetic data");
    add_common(synth);
    synth->add_option("--kind", cfg.synth_kind, "video | meta | images");
    synth->add_option("--width", cfg.synth_width, "frame width");
    synth->add_option("--height", cfg.synth_height, "frame height");
    synth->add_option("--chunks", cfg.video.chunks, "video: chunk count");
    synth->add_option("--frames-per-chunk", cfg.video.frames_per_chunk,
                      "video: frames per chunk");
    synth->add_option("--fps", cfg.video.fps, "video: frames per second");
    synth->add_option("--iframe-interval", cfg.video.iframe_interval,
                      "video: I-frame spacing");
    synth->add_option("--drift", cfg.video.drift,
                      "video: chunk-to-chunk drift");
    synth->add_option("--tasks", cfg.synth_tasks, "meta: task count");
    synth->add_option("--frames", cfg.synth_frames, "meta: frames per task");
    synth->add_option("--count", cfg.synth_count, "images: image count");

    CLI::App* ingest = app.add_subcommand("ingest", "build a chunk manifest");
    add_common(ingest);
    ingest->add_option("--frames", cfg.frames_dir, "frame directory")
        ->required();
    ingest->add_option("--fps", cfg.fps, "frames per second");
    ingest->add_option("--chunk-seconds", cfg.chunk_seconds,
                       "uniform chunk length in seconds");
    ingest->add_option("--iframes", cfg.iframe_sidecar,
                       "I-frame index sidecar (one index per line)");
    ingest->add_option("--iframes-per-group", cfg.iframes_per_group,
                       "long videos: I-frames per group");

    CLI::App* mt = app.add_subcommand("meta-train",
                                      "pretrain + meta-learn the shared model");
    add_common(mt);
    mt->add_option("--meta-dir", cfg.meta_dir, "directory of task subdirs")
        ->required();
    mt->add_option("--pretrain-dir", cfg.pretrain_dir,
                   "image directory for pretraining");
    mt->add_option("--pretrain-steps", cfg.pc.steps, "pretraining steps");
    mt->add_option("--pretrain-lr", cfg.pc.lr, "pretraining learning rate");
    mt->add_option("--inner-lr", cfg.mc.inner_lr, "inner learning rate");
    mt->add_option("--outer-lr", cfg.mc.outer_lr, "outer learning rate");
    mt->add_option("--inner-steps", cfg.mc.inner_steps,
                   "gradient updates per task");
    mt->add_option("--tasks", cfg.mc.tasks_per_iter, "tasks per iteration");
    mt->add_option("--frames", cfg.mc.frames_per_task, "frames per task");
    mt->add_option("--patch", cfg.mc.patch_size, "HR patch size");
    mt->add_option("--batch", cfg.mc.batch_size_per_task,
                   "batch size per task");
    mt->add_option("--outer-iters", cfg.mc.outer_iters, "outer iterations");
    mt->add_flag("--outer-adam", cfg.mc.outer_adam,
                 "Adam for the outer update");

    CLI::App* adapt_cmd =
        app.add_subcommand("adapt", "sequential per-chunk adaptation");
    add_common(adapt_cmd);
    adapt_cmd->add_option("--manifest", cfg.manifest_path, "manifest file")
        ->required();
    adapt_cmd->add_option("--model", cfg.model_path, "initial model file");
    adapt_cmd->add_option("--models", cfg.models_dir,
                          "models directory (with --init)");
    adapt_cmd->add_option("--init", cfg.init, "meta | pretrained");
    adapt_cmd->add_option("--preset", cfg.preset, "S | M | L | custom");
    CLI::Option* opt_p1 =
        adapt_cmd->add_option("--p1", cfg.ac.p1, "first-chunk percent");
    CLI::Option* opt_p2 =
        adapt_cmd->add_option("--p2", cfg.ac.p2, "later-chunk percent");
    CLI::Option* opt_epochs =
        adapt_cmd->add_option("--epochs", cfg.ac.epochs, "fine-tune epochs");
    adapt_cmd->add_option("--lr", cfg.ac.lr, "fine-tune learning rate");
    adapt_cmd->add_option("--batch", cfg.ac.batch_size, "batch size");
    adapt_cmd->add_option("--patch", cfg.ac.patch_size, "HR patch size");
    adapt_cmd->add_option("--probe-steps", cfg.ac.probe_steps,
                          "gradient-mask probe steps");
    adapt_cmd->add_option("--steps", cfg.ac.steps_override,
                          "override the step count per chunk");
    adapt_cmd->add_option("--r", cfg.sc.r, "percent of hardest patches");
    adapt_cmd->add_flag("--no-cps", cfg.no_cps,
                        "train on all patches instead of CPS");
    adapt_cmd->add_option("--chunks", cfg.chunks_limit,
                          "adapt only the first N chunks");
    adapt_cmd->add_option("--iframes-per-group", cfg.iframes_per_group,
                          "long videos: I-frames per group");
    adapt_cmd->add_option("--dump-psnr-maps", cfg.dump_psnr_maps,
                          "directory for PSNR map dumps");

    CLI::App* apply_cmd =
        app.add_subcommand("apply", "reconstruct models and super-resolve");
    add_common(apply_cmd);
    apply_cmd->add_option("--manifest", cfg.manifest_path, "manifest file")
        ->required();
    apply_cmd->add_option("--model", cfg.model_path, "shared model file");
    apply_cmd->add_option("--models", cfg.models_dir,
                          "models directory (with --init)");
    apply_cmd->add_option("--init", cfg.init, "meta | pretrained");
    apply_cmd->add_option("--deltas", cfg.deltas_dir, "delta directory");

    CLI::App* eval_cmd = app.add_subcommand("evaluate", "PSNR tables");
    add_common(eval_cmd);
    eval_cmd->add_option("--manifest", cfg.manifest_path, "manifest file")
        ->required();
    eval_cmd->add_option("--sr", cfg.sr_dir, "super-resolved frame directory")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (synth->parsed()) {
            cfg.video.width = cfg.synth_width;
            cfg.video.height = cfg.synth_height;
            return cmd_synth(cfg);
        }
        if (ingest->parsed()) return cmd_ingest(cfg);
        if (mt->parsed()) return cmd_meta_train(cfg);
        if (adapt_cmd->parsed()) {
            // preset expands first; explicit flags win
            const double p1 = cfg.ac.p1, p2 = cfg.ac.p2,
                         epochs = cfg.ac.epochs;
            apply_preset(cfg);
            if (opt_p1->count()) cfg.ac.p1 = p1;
            if (opt_p2->count()) cfg.ac.p2 = p2;
            if (opt_epochs->count()) cfg.ac.epochs = epochs;
            return cmd_adapt(cfg);
        }
        if (apply_cmd->parsed()) return cmd_apply(cfg);
        if (eval_cmd->parsed()) return cmd_evaluate(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace chunksr::cli
