#include "skyseg/runconfig.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "skyseg/errors.hpp"

namespace skyseg {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

template <class F>
auto parse_num(const std::string& key, const std::string& v, F conv) {
  try {
    std::size_t pos = 0;
    auto r = conv(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError(key + ": bad numeric value '" + v + "'");
  }
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  return parse_num(key, v, [](const std::string& s, std::size_t* p) {
    return std::size_t(std::stoull(s, p));
  });
}

double parse_double(const std::string& key, const std::string& v) {
  return parse_num(key, v, [](const std::string& s, std::size_t* p) {
    return std::stod(s, p);
  });
}

std::vector<std::size_t> parse_profile(const std::string& v) {
  if (v == "full") return full_sl_profile();
  if (v == "reduced") return reduced_sl_profile();
  std::vector<std::size_t> out;
  for (const auto& item : split_list(v)) out.push_back(parse_size("sl_counts", item));
  return out;
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");

    if (key == "task") cfg.task = parse_task(val);
    else if (key == "sl_counts") cfg.sl_counts = parse_profile(val);
    else if (key == "growth") cfg.growth = parse_size(key, val);
    else if (key == "stem_channels") cfg.stem_channels = parse_size(key, val);
    else if (key == "lkbr_on_skips") cfg.lkbr_on_skips = parse_bool(key, val);
    else if (key == "seed") cfg.seed = parse_size(key, val);
    else if (key == "loss") cfg.loss = parse_loss_combo(val);
    else if (key == "branch_weights") {
      cfg.branch_weights.clear();
      for (const auto& item : split_list(val))
        cfg.branch_weights.push_back(parse_double(key, item));
    }
    else if (key == "schedule_ramp_epochs") cfg.schedule_ramp_epochs = parse_size(key, val);
    else if (key == "scheduled_class_weights") cfg.scheduled_class_weights = parse_bool(key, val);
    else if (key == "dice_squared_sums") cfg.dice_squared_sums = parse_bool(key, val);
    else if (key == "lr") cfg.lr = parse_double(key, val);
    else if (key == "batch") cfg.batch = parse_size(key, val);
    else if (key == "epochs") cfg.epochs = parse_size(key, val);
    else if (key == "max_steps") cfg.max_steps = parse_size(key, val);
    else if (key == "checkpoint_every") cfg.checkpoint_every = parse_size(key, val);
    else if (key == "flips") cfg.flips = parse_bool(key, val);
    else if (key == "tile") cfg.tile = parse_size(key, val);
    else if (key == "train_overlap") cfg.train_overlap = parse_double(key, val);
    else if (key == "eval_overlap") cfg.eval_overlap = parse_double(key, val);
    else if (key == "data_dir") cfg.data_dir = val;
    else if (key == "out_dir") cfg.out_dir = val;
    else if (key == "weights") cfg.weights = val;
    else throw ConfigError("unknown config key: " + key);
  }
  if (cfg.lr <= 0) throw ConfigError("lr must be positive");
  if (cfg.batch == 0) throw ConfigError("batch must be positive");
  return cfg;
}

RunConfig parse_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config_text(text.str());
}

void apply_env_seed(RunConfig& cfg) {
  if (const char* s = std::getenv("SKYSEG_SEED")) {
    try {
      cfg.seed = std::stoull(s);
    } catch (const std::exception&) {
      throw ConfigError("SKYSEG_SEED is not a valid integer");
    }
  }
}

}  // namespace skyseg
