#include "srn/commands.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "srn/bti.hpp"
#include "srn/checkpoint.hpp"
#include "srn/detection.hpp"
#include "srn/eval.hpp"
#include "srn/scene_gen.hpp"
#include "srn/train.hpp"
#include "srn/voxelize.hpp"

namespace srn::cli {

namespace {

std::uint64_t frame_id_from_name(const std::string& stem, std::uint64_t fallback) {
  std::string digits;
  for (char ch : stem)
    if (ch >= '0' && ch <= '9') digits.push_back(ch);
  if (digits.empty()) return fallback;
  return std::strtoull(digits.c_str(), nullptr, 10);
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::vector<DatasetFrame> load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw std::runtime_error("dataset directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext == ".rpc5" || ext == ".csv") {
      if (entry.path().filename() == "manifest.csv") continue;
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no point cloud files in " + dir.string());

  std::vector<DatasetFrame> frames;
  for (std::size_t i = 0; i < files.size(); ++i) {
    DatasetFrame f;
    f.file = files[i].filename().string();
    f.frame_id = frame_id_from_name(files[i].stem().string(), i);
    f.cloud = load_point_cloud(files[i], f.frame_id);
    frames.push_back(std::move(f));
  }
  return frames;
}

std::map<std::uint64_t, std::vector<Box3D>> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest not found: " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      line.rfind("frame_file,cx,cy,cz,l,w,h,yaw", 0) != 0)
    throw std::runtime_error("manifest: bad header in " + path.string());

  std::map<std::uint64_t, std::vector<Box3D>> gts;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 8)
      throw std::runtime_error("manifest: bad row at line " + std::to_string(line_no));
    Box3D box;
    box.cx = std::stof(fields[1]);
    box.cy = std::stof(fields[2]);
    box.cz = std::stof(fields[3]);
    box.l = std::stof(fields[4]);
    box.w = std::stof(fields[5]);
    box.h = std::stof(fields[6]);
    box.yaw = std::stof(fields[7]);
    const std::string stem = std::filesystem::path(fields[0]).stem().string();
    gts[frame_id_from_name(stem, 0)].push_back(box);
  }
  return gts;
}

std::vector<Detection> run_inference(Network& net, const RunConfig& config,
                                     const std::vector<DatasetFrame>& frames, Mode mode,
                                     bool use_bti, double r, int steps, OpLedger& ledger) {
  const AnchorGrid anchors = config.make_anchor_grid();
  auto state = net.make_state();
  std::vector<Detection> all;
  for (const DatasetFrame& frame : frames) {
    net.reset(state);
    std::vector<RadarPointCloud> cascade;
    if (mode == Mode::kSnn && use_bti)
      cascade = bti_cascade(frame.cloud, r, steps);
    else
      cascade.push_back(frame.cloud);

    Network::ForwardMaps maps;
    for (std::size_t t = 0; t < cascade.size(); ++t) {
      if (t > 0 && config.bti_reset_per_step) net.reset(state);
      const VoxelFeatureGrid grid = voxelize(cascade[t], config.net.grid);
      maps = net.forward(grid.values, mode, state, &ledger);
    }
    // Detections come from the last step's feature maps only.
    auto dets = decode(maps.head_raw, anchors, config.score_threshold, frame.frame_id);
    dets = nms_bev(dets, config.nms_iou);
    all.insert(all.end(), dets.begin(), dets.end());
  }
  return all;
}

void write_detections_csv(const std::filesystem::path& path, const std::vector<Detection>& dets) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "frame_id,score,cx,cy,cz,l,w,h,yaw\n";
  for (const Detection& d : dets) {
    out << d.frame_id << ',' << fixed6(d.score) << ',' << fixed6(d.box.cx) << ','
        << fixed6(d.box.cy) << ',' << fixed6(d.box.cz) << ',' << fixed6(d.box.l) << ','
        << fixed6(d.box.w) << ',' << fixed6(d.box.h) << ',' << fixed6(d.box.yaw) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<Detection> read_detections_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("detections file not found: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("frame_id,score,cx,cy,cz,l,w,h,yaw", 0) != 0)
    throw std::runtime_error("detections: bad header in " + path.string());
  std::vector<Detection> dets;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 9) throw std::runtime_error("detections: bad row: " + line);
    Detection d;
    d.frame_id = std::strtoull(fields[0].c_str(), nullptr, 10);
    d.score = std::stof(fields[1]);
    d.box.cx = std::stof(fields[2]);
    d.box.cy = std::stof(fields[3]);
    d.box.cz = std::stof(fields[4]);
    d.box.l = std::stof(fields[5]);
    d.box.w = std::stof(fields[6]);
    d.box.h = std::stof(fields[7]);
    d.box.yaw = std::stof(fields[8]);
    dets.push_back(d);
  }
  return dets;
}

void write_energy_csv(const std::filesystem::path& path, const OpLedger& ledger,
                      const EnergyModel& model, CountingMode mode) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "layer,mac,ac,energy_j\n";
  char buf[64];
  for (const OpLedger::Row& row : ledger.rows()) {
    const double e = model.e_mac * static_cast<double>(row.counts.mac(mode)) +
                     model.e_ac * static_cast<double>(row.counts.ac(mode));
    std::snprintf(buf, sizeof(buf), "%.9e", e);
    out << row.layer << ',' << row.counts.mac(mode) << ',' << row.counts.ac(mode) << ',' << buf
        << '\n';
  }
  std::snprintf(buf, sizeof(buf), "%.9e", energy_joules(ledger, model, mode));
  out << "total," << ledger.mac_count(mode) << ',' << ledger.ac_count(mode) << ',' << buf << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

RunConfig make_config(const GlobalOpts& g) {
  RunConfig config = g.config_path.empty() ? default_run_config()
                                           : load_run_config(g.config_path);
  if (g.seed_set) {
    config.scene.seed = g.seed;
    config.train.seed = g.seed;
  }
  config.validate();
  return config;
}

std::filesystem::path require_out(const GlobalOpts& g) {
  if (g.out_dir.empty()) throw std::runtime_error("--out is required for this command");
  std::filesystem::create_directories(g.out_dir);
  return g.out_dir;
}

std::vector<TrainFrame> build_train_frames(const RunConfig& config,
                                           const std::vector<DatasetFrame>& frames,
                                           const std::map<std::uint64_t, std::vector<Box3D>>& gts) {
  const AnchorGrid anchors = config.make_anchor_grid();
  std::vector<TrainFrame> out;
  static const std::vector<Box3D> kNone;
  for (const DatasetFrame& f : frames) {
    auto it = gts.find(f.frame_id);
    out.push_back(make_train_frame(f.cloud, it != gts.end() ? it->second : kNone,
                                   config.net.grid, anchors, config.pos_iou, config.neg_iou,
                                   config.force_match));
  }
  return out;
}

int cmd_gen(const GlobalOpts& g, int count) {
  const RunConfig config = make_config(g);
  const auto out = require_out(g);
  generate_dataset(config.scene, count, config.scene.seed, out);
  std::cout << "wrote " << count << " frames and manifest.csv to " << out.string() << "\n";
  return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& data_dir) {
  const RunConfig config = make_config(g);
  const auto out = require_out(g);
  const auto ckpt_path = out / "checkpoint.spkr";
  if (std::filesystem::exists(ckpt_path))
    throw std::runtime_error("refusing to overwrite existing checkpoint at " + ckpt_path.string() +
                             "; resuming is not supported (remove it or pick another --out)");

  const auto frames = load_dataset(data_dir);
  const auto gts = load_manifest(std::filesystem::path(data_dir) / "manifest.csv");
  const auto train_frames = build_train_frames(config, frames, gts);

  Network net(config.net);
  net.init_params(config.train.seed);
  const TrainResult result = train_loop(net, train_frames, config.train);

  std::ofstream log(out / "loss_log.csv");
  log << "epoch,step,loss_cls,loss_reg,loss_total\n";
  for (const LossRow& row : result.log) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,%.6f,%.6f\n", row.epoch, row.step, row.cls,
                  row.reg, row.total);
    log << buf;
  }
  save_checkpoint(network_state(net), ckpt_path);
  std::cout << "trained " << result.log.size() << " steps; initial loss "
            << fixed6(result.initial_loss()) << ", final loss " << fixed6(result.final_loss())
            << "\ncheckpoint: " << ckpt_path.string() << "\n";
  return 0;
}

int cmd_infer(const GlobalOpts& g, const std::string& data_dir, const std::string& ckpt,
              const std::string& mode_name, const std::vector<double>& bti) {
  const RunConfig config = make_config(g);
  const auto out = require_out(g);
  const Mode mode = mode_name == "ann" ? Mode::kAnn : Mode::kSnn;
  if (mode == Mode::kAnn && !bti.empty())
    throw std::runtime_error("--bti is only valid in snn mode");
  const bool use_bti = !bti.empty();
  const double r = use_bti ? bti[0] : config.bti_r;
  const int steps = use_bti ? static_cast<int>(bti[1]) : 1;

  Network net(config.net);
  load_network_state(net, load_checkpoint(ckpt));
  const auto frames = load_dataset(data_dir);

  OpLedger ledger;
  const auto dets = run_inference(net, config, frames, mode, use_bti, r, steps, ledger);
  write_detections_csv(out / "detections.csv", dets);
  write_energy_csv(out / "energy.csv", ledger, config.energy, config.counting);

  for (CountingMode m : {CountingMode::kDense, CountingMode::kEvent, CountingMode::kMixed}) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-5s counting: mac=%" PRIu64 " ac=%" PRIu64 " energy=%.9e J\n",
                  counting_mode_name(m), ledger.mac_count(m), ledger.ac_count(m),
                  energy_joules(ledger, config.energy, m));
    std::cout << buf;
  }
  std::cout << dets.size() << " detections over " << frames.size() << " frames -> "
            << (out / "detections.csv").string() << "\n";
  return 0;
}

int cmd_eval(const GlobalOpts& g, const std::string& det_path, const std::string& manifest_path) {
  const RunConfig config = make_config(g);
  const auto dets = read_detections_csv(det_path);
  const auto gts = load_manifest(manifest_path);
  const APResult res = evaluate_detections(dets, gts, config.eval_iou);

  std::ostringstream report;
  report << "metric,value\n";
  report << "ap_bev," << fixed6(res.ap_bev) << "\n";
  report << "ap_3d," << fixed6(res.ap_3d) << "\n";
  report << "tp," << res.tp << "\nfp," << res.fp << "\nfn," << res.fn << "\n";
  if (!g.out_dir.empty()) {
    std::filesystem::create_directories(g.out_dir);
    std::ofstream out(std::filesystem::path(g.out_dir) / "eval.csv");
    out << report.str();
  }
  std::cout << report.str();
  return 0;
}

int cmd_energy(std::uint64_t mac, std::uint64_t ac, std::uint64_t vs_mac, std::uint64_t vs_ac,
               bool have_vs, const GlobalOpts& g) {
  const RunConfig config = make_config(g);
  OpLedger a;
  a.record("total", mac, ac);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "energy_j,%.9e\n", energy_joules(a, config.energy));
  std::cout << "mac," << mac << "\nac," << ac << "\n" << buf;
  if (have_vs) {
    OpLedger b;
    b.record("total", vs_mac, vs_ac);
    std::snprintf(buf, sizeof(buf), "vs_energy_j,%.9e\n", energy_joules(b, config.energy));
    std::cout << "vs_mac," << vs_mac << "\nvs_ac," << vs_ac << "\n" << buf;
    std::snprintf(buf, sizeof(buf), "reduction_percent,%.3f\n", compare(a, b, config.energy));
    std::cout << buf;
  }
  return 0;
}

int cmd_sweep(const GlobalOpts& g, const std::string& data_dir, const std::string& ckpt,
              const std::vector<double>& rs, const std::vector<int>& steps_list) {
  const RunConfig config = make_config(g);
  const auto out = require_out(g);
  Network net(config.net);
  load_network_state(net, load_checkpoint(ckpt));
  const auto frames = load_dataset(data_dir);
  const auto gts = load_manifest(std::filesystem::path(data_dir) / "manifest.csv");

  std::ofstream table(out / "sweep.csv");
  table << "T,r,ap_3d,ap_bev,mac,ac,energy_j\n";
  for (int steps : steps_list) {
    for (double r : rs) {
      OpLedger ledger;
      const auto dets =
          run_inference(net, config, frames, Mode::kSnn, steps > 1, r, steps, ledger);
      const APResult res = evaluate_detections(dets, gts, config.eval_iou);
      const double n = static_cast<double>(frames.size());
      char buf[224];
      std::snprintf(buf, sizeof(buf), "%d,%g,%.6f,%.6f,%.6g,%.6g,%.9e\n", steps, r, res.ap_3d,
                    res.ap_bev, static_cast<double>(ledger.mac_count(config.counting)) / n,
                    static_cast<double>(ledger.ac_count(config.counting)) / n,
                    energy_joules(ledger, config.energy, config.counting) / n);
      table << buf;
      std::cout << buf;
    }
  }
  std::cout << "sweep table -> " << (out / "sweep.csv").string() << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"spikeradar: event-driven spiking 3D detector for 4D radar point clouds"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "key=value config file");
  app.add_option("--out", g.out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", g.seed, "override scene/train seeds");

  auto* gen = app.add_subcommand("gen", "generate a synthetic labeled dataset");
  int gen_count = 20;
  gen->add_option("--count", gen_count, "frame count")->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("train", "train on a generated dataset (T=1)");
  std::string train_data;
  train->add_option("--data", train_data, "dataset directory")->required();

  auto* infer = app.add_subcommand("infer", "run detection over a dataset");
  std::string infer_data, infer_ckpt, infer_mode = "snn";
  std::vector<double> infer_bti;
  infer->add_option("--data", infer_data, "dataset directory")->required();
  infer->add_option("--checkpoint", infer_ckpt, "checkpoint file")->required();
  infer->add_option("--mode", infer_mode, "ann|snn")->check(CLI::IsMember({"ann", "snn"}));
  infer->add_option("--bti", infer_bti, "density ratio r and time steps T")->expected(2);

  auto* eval = app.add_subcommand("eval", "score detections against a manifest");
  std::string eval_dets, eval_manifest;
  eval->add_option("--detections", eval_dets, "detections CSV")->required();
  eval->add_option("--manifest", eval_manifest, "ground-truth manifest CSV")->required();

  auto* energy = app.add_subcommand("energy", "energy model over given op counts");
  double e_mac = 0, e_ac = 0, e_vs_mac = 0, e_vs_ac = 0;
  energy->add_option("--mac", e_mac, "MAC count")->required();
  energy->add_option("--ac", e_ac, "AC count");
  auto* vs_mac_opt = energy->add_option("--vs-mac", e_vs_mac, "comparison MAC count");
  energy->add_option("--vs-ac", e_vs_ac, "comparison AC count");

  auto* sweep = app.add_subcommand("sweep", "detection/energy table over (T, r)");
  std::string sweep_data, sweep_ckpt;
  std::vector<double> sweep_r{80.0};
  std::vector<int> sweep_steps{1, 2, 3};
  sweep->add_option("--data", sweep_data, "dataset directory")->required();
  sweep->add_option("--checkpoint", sweep_ckpt, "checkpoint file")->required();
  sweep->add_option("--r", sweep_r, "density ratios")->delimiter(',');
  sweep->add_option("--steps", sweep_steps, "time step counts")->delimiter(',');

  std::vector<const char*> argv;
  argv.push_back("spikeradar");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  g.seed_set = seed_opt->count() > 0;
  try {
    if (gen->parsed()) return cmd_gen(g, gen_count);
    if (train->parsed()) return cmd_train(g, train_data);
    if (infer->parsed()) return cmd_infer(g, infer_data, infer_ckpt, infer_mode, infer_bti);
    if (eval->parsed()) return cmd_eval(g, eval_dets, eval_manifest);
    if (energy->parsed())
      return cmd_energy(static_cast<std::uint64_t>(e_mac), static_cast<std::uint64_t>(e_ac),
                        static_cast<std::uint64_t>(e_vs_mac), static_cast<std::uint64_t>(e_vs_ac),
                        vs_mac_opt->count() > 0, g);
    if (sweep->parsed()) return cmd_sweep(g, sweep_data, sweep_ckpt, sweep_r, sweep_steps);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no command\n";
  return 1;
}

}  // namespace srn::cli
