#include "srn/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace srn {

AnchorGrid RunConfig::make_anchor_grid() const {
  AnchorGrid grid;
  grid.spec = anchor;
  grid.ny = net.grid.ny;
  grid.nx = net.grid.nx;
  grid.y_min = net.grid.y_min;
  grid.x_min = net.grid.x_min;
  grid.cell_y = (net.grid.y_max - net.grid.y_min) / static_cast<float>(net.grid.ny);
  grid.cell_x = (net.grid.x_max - net.grid.x_min) / static_cast<float>(net.grid.nx);
  return grid;
}

void RunConfig::validate() const {
  net.validate();
  train.validate();
  scene.validate();
  energy.validate();
  if (anchor.yaws.empty()) throw std::invalid_argument("config: anchor yaw set is empty");
  if (net.anchors_per_cell != static_cast<int>(anchor.yaws.size()))
    throw std::invalid_argument("config: anchors_per_cell out of sync with yaw set");
  if (pos_iou < neg_iou) throw std::invalid_argument("config: pos IoU gate below neg gate");
  if (bti_steps < 1) throw std::invalid_argument("config: bti.steps must be >= 1");
  if (!(bti_r > 0.0) || bti_r > 100.0)
    throw std::invalid_argument("config: bti.r must be in (0, 100]");
  if (!(eval_iou > 0.0) || eval_iou > 1.0)
    throw std::invalid_argument("config: eval.iou must be in (0, 1]");
}

RunConfig default_run_config() { return RunConfig{}; }

namespace {

double parse_num(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("config: bad numeric value for " + key + ": \"" + value + "\"");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  const double v = parse_num(key, value);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw std::invalid_argument("config: expected integer for " + key);
  return i;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config: expected true/false for " + key);
}

std::vector<float> parse_float_list(const std::string& key, const std::string& value) {
  std::vector<float> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(static_cast<float>(parse_num(key, item)));
  if (out.empty()) throw std::invalid_argument("config: empty list for " + key);
  return out;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  const auto end = s.find_last_not_of(" \t\r");
  return begin == std::string::npos ? std::string() : s.substr(begin, end - begin + 1);
}

}  // namespace

void apply_config_entry(RunConfig& c, const std::string& key, const std::string& value) {
  auto num = [&] { return parse_num(key, value); };
  auto fnum = [&] { return static_cast<float>(parse_num(key, value)); };
  auto inum = [&] { return parse_int(key, value); };
  auto bval = [&] { return parse_bool(key, value); };

  // grid
  if (key == "grid.x_min") c.net.grid.x_min = fnum();
  else if (key == "grid.x_max") c.net.grid.x_max = fnum();
  else if (key == "grid.y_min") c.net.grid.y_min = fnum();
  else if (key == "grid.y_max") c.net.grid.y_max = fnum();
  else if (key == "grid.z_min") c.net.grid.z_min = fnum();
  else if (key == "grid.z_max") c.net.grid.z_max = fnum();
  else if (key == "grid.nz") c.net.grid.nz = inum();
  else if (key == "grid.ny") c.net.grid.ny = inum();
  else if (key == "grid.nx") c.net.grid.nx = inum();
  // backbone
  else if (key == "backbone.channels") {
    const auto list = parse_float_list(key, value);
    if (list.size() != 3) throw std::invalid_argument("config: backbone.channels needs 3 values");
    for (int j = 0; j < 3; ++j) c.net.channels[j] = static_cast<int>(list[j]);
  } else if (key == "backbone.bev_channels") {
    const auto list = parse_float_list(key, value);
    if (list.size() != 3)
      throw std::invalid_argument("config: backbone.bev_channels needs 3 values");
    for (int j = 0; j < 3; ++j) c.net.bev_channels[j] = static_cast<int>(list[j]);
  } else if (key == "backbone.kernel") c.net.kernel = inum();
  // lif
  else if (key == "lif.decay") c.net.lif.decay = fnum();
  else if (key == "lif.v_th") c.net.lif.v_th = fnum();
  else if (key == "lif.beta") c.net.lif.beta = fnum();
  else if (key == "lif.u_reset") c.net.lif.u_reset = fnum();
  // bti
  else if (key == "bti.r") c.bti_r = num();
  else if (key == "bti.steps") c.bti_steps = inum();
  else if (key == "bti.reset_per_step") c.bti_reset_per_step = bval();
  // head
  else if (key == "head.kernel") c.net.head_kernel = inum();
  else if (key == "head.anchor_l") c.anchor.l = fnum();
  else if (key == "head.anchor_w") c.anchor.w = fnum();
  else if (key == "head.anchor_h") c.anchor.h = fnum();
  else if (key == "head.anchor_z") c.anchor.z_center = fnum();
  else if (key == "head.yaws") {
    c.anchor.yaws = parse_float_list(key, value);
    c.net.anchors_per_cell = static_cast<int>(c.anchor.yaws.size());
  } else if (key == "head.pos_iou") c.pos_iou = fnum();
  else if (key == "head.neg_iou") c.neg_iou = fnum();
  else if (key == "head.force_match") c.force_match = bval();
  else if (key == "head.score_threshold") c.score_threshold = fnum();
  else if (key == "head.nms_iou") c.nms_iou = fnum();
  // train
  else if (key == "train.epochs") c.train.epochs = inum();
  else if (key == "train.batch_size") c.train.batch_size = inum();
  else if (key == "train.seed") c.train.seed = static_cast<std::uint64_t>(num());
  else if (key == "train.lr") c.train.optimizer.lr = num();
  else if (key == "train.weight_decay") c.train.optimizer.weight_decay = num();
  else if (key == "train.w_cls") c.train.w_cls = fnum();
  else if (key == "train.w_reg") c.train.w_reg = fnum();
  else if (key == "train.bn_momentum") {
    c.train.bn_momentum = fnum();
    c.net.bn_momentum = fnum();
  } else if (key == "train.mode") {
    if (value == "snn") c.train.mode = Mode::kSnn;
    else if (value == "ann") c.train.mode = Mode::kAnn;
    else throw std::invalid_argument("config: train.mode must be snn or ann");
  }
  // scene
  else if (key == "scene.x_min") c.scene.x_min = fnum();
  else if (key == "scene.x_max") c.scene.x_max = fnum();
  else if (key == "scene.y_min") c.scene.y_min = fnum();
  else if (key == "scene.y_max") c.scene.y_max = fnum();
  else if (key == "scene.z_min") c.scene.z_min = fnum();
  else if (key == "scene.z_max") c.scene.z_max = fnum();
  else if (key == "scene.z_center_min") c.scene.z_center_min = fnum();
  else if (key == "scene.z_center_max") c.scene.z_center_max = fnum();
  else if (key == "scene.vehicles_min") c.scene.vehicles_min = inum();
  else if (key == "scene.vehicles_max") c.scene.vehicles_max = inum();
  else if (key == "scene.len_mean") c.scene.len_mean = fnum();
  else if (key == "scene.len_jitter") c.scene.len_jitter = fnum();
  else if (key == "scene.wid_mean") c.scene.wid_mean = fnum();
  else if (key == "scene.wid_jitter") c.scene.wid_jitter = fnum();
  else if (key == "scene.hgt_mean") c.scene.hgt_mean = fnum();
  else if (key == "scene.hgt_jitter") c.scene.hgt_jitter = fnum();
  else if (key == "scene.points_min") c.scene.points_per_vehicle_min = inum();
  else if (key == "scene.points_max") c.scene.points_per_vehicle_max = inum();
  else if (key == "scene.noise_fraction") c.scene.noise_fraction = fnum();
  else if (key == "scene.target_power_mu") c.scene.target_power_mu = fnum();
  else if (key == "scene.target_power_sigma") c.scene.target_power_sigma = fnum();
  else if (key == "scene.noise_power_mu") c.scene.noise_power_mu = fnum();
  else if (key == "scene.noise_power_sigma") c.scene.noise_power_sigma = fnum();
  else if (key == "scene.doppler_max") c.scene.doppler_max = fnum();
  else if (key == "scene.seed") c.scene.seed = static_cast<std::uint64_t>(num());
  // energy
  else if (key == "energy.e_mac") c.energy.e_mac = num();
  else if (key == "energy.e_ac") c.energy.e_ac = num();
  else if (key == "counting.mode") {
    if (value == "dense") c.counting = CountingMode::kDense;
    else if (value == "event") c.counting = CountingMode::kEvent;
    else if (value == "mixed") c.counting = CountingMode::kMixed;
    else throw std::invalid_argument("config: counting.mode must be dense, event or mixed");
  }
  // eval
  else if (key == "eval.iou") c.eval_iou = num();
  else
    throw std::invalid_argument("config: unknown key \"" + key + "\"");
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  RunConfig config = default_run_config();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(line_no) +
                               " is not key=value: \"" + line + "\"");
    apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  config.validate();
  return config;
}

}  // namespace srn
