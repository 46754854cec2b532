#include "oodmol/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "oodmol/error.hpp"

namespace oodmol {
namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw Error(ErrorKind::BadConfig, where_ + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorKind::BadConfig, where_ + "." + key + " has the wrong type");
    }
  }

  const json* section(const char* key) {
    seen_.insert(key);
    return obj_.contains(key) ? &obj_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw Error(ErrorKind::BadConfig, "unknown key '" + key + "' in " + where_);
    }
  }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::BadConfig, what);
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::BadConfig, std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Reader top(root, "config");
  top.get("seed", c.seed);
  top.get("property", c.property);
  if (const json* s = top.section("bench")) {
    Reader r(*s, "bench");
    std::string mode = "blocks";
    r.get("k_total", c.bench.k_total);
    r.get("n_source", c.bench.n_source);
    r.get("task_threshold", c.bench.task_threshold);
    r.get("max_tasks", c.bench.max_tasks);
    r.get("min_scaffold_members", c.bench.min_scaffold_members);
    r.get("alpha_comp", c.bench.alpha_comp);
    r.get("tau_dist", c.bench.tau_dist);
    r.get("w1_projections", c.bench.w1_projections);
    r.get("kmeans_max_iterations", c.bench.kmeans_max_iterations);
    r.get("morgan_radius", c.bench.morgan_radius);
    r.get("descriptor_mode", mode);
    r.finish();
    require(mode == "blocks" || mode == "summary", "bench.descriptor_mode must be 'blocks' or 'summary'");
    c.bench.descriptor_mode = mode == "blocks" ? DescriptorMode::Blocks : DescriptorMode::Summary;
  }
  if (const json* s = top.section("encoder")) {
    Reader r(*s, "encoder");
    r.get("dim", c.encoder.dim);
    r.get("layers", c.encoder.layers);
    r.finish();
  }
  if (const json* s = top.section("train")) {
    Reader r(*s, "train");
    r.get("lr", c.train.lr);
    r.get("batch_size", c.train.batch_size);
    r.get("baseline_epochs", c.train.baseline_epochs);
    r.get("shallow_epochs", c.train.shallow_epochs);
    r.get("finetune_epochs", c.train.finetune_epochs);
    r.get("proxy_epochs", c.train.proxy_epochs);
    r.get("e_warm", c.train.e_warm);
    r.get("beta_m", c.train.beta_m);
    r.get("tau_reg", c.train.tau_reg);
    r.finish();
  }
  if (const json* s = top.section("selector")) {
    Reader r(*s, "selector");
    auto& g = c.selector.grpo;
    r.get("n_proxies", c.selector.n_proxies);
    r.get("pool_size", c.selector.pool_size);
    r.get("select_k", c.selector.select_k);
    r.get("hidden", c.selector.hidden);
    r.get("steps", g.steps);
    r.get("group_size", g.group_size);
    r.get("k_max", g.k_max);
    r.get("beta", g.beta);
    r.get("eps_clip", g.eps_clip);
    r.get("eps_s", g.eps_s);
    r.get("policy_lr", g.lr);
    r.get("optimizer", g.optimizer);
    r.get("threads", g.threads);
    r.get("lambda", c.selector.retrieval.lambda);
    r.get("tau_sim", c.selector.retrieval.tau_sim);
    r.get("wl_iterations", c.selector.retrieval.wl_iterations);
    r.finish();
  }
  top.finish();
  c.bench.seed = c.seed;
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::BadConfig, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return from_json(ss.str());
}

void RunConfig::validate() const {
  const BenchConfig& b = bench;
  require(b.k_total >= 3, "bench.k_total must be >= 3");
  require(b.n_source >= 1 && b.n_source <= b.k_total - 2, "bench.n_source must lie in [1, k_total - 2]");
  require(b.task_threshold >= 1, "bench.task_threshold must be >= 1");
  require(b.max_tasks >= 1, "bench.max_tasks must be >= 1");
  require(b.min_scaffold_members >= 1, "bench.min_scaffold_members must be >= 1");
  require(b.alpha_comp >= 0.0, "bench.alpha_comp must be >= 0");
  require(b.tau_dist >= 0.0, "bench.tau_dist must be >= 0");
  require(b.w1_projections >= 1, "bench.w1_projections must be >= 1");
  require(b.kmeans_max_iterations >= 1, "bench.kmeans_max_iterations must be >= 1");
  require(b.morgan_radius >= 0 && b.morgan_radius <= 6, "bench.morgan_radius must lie in [0, 6]");
  require(encoder.dim >= 2 && encoder.dim <= 1024, "encoder.dim must lie in [2, 1024]");
  require(encoder.layers >= 1 && encoder.layers <= 16, "encoder.layers must lie in [1, 16]");
  const TrainSettings& t = train;
  require(t.lr > 0.0 && t.lr < 1.0, "train.lr must lie in (0, 1)");
  require(t.batch_size >= 2, "train.batch_size must be >= 2");
  require(t.baseline_epochs >= 0 && t.finetune_epochs >= 0 && t.proxy_epochs >= 0,
          "train epoch counts must be >= 0");
  require(t.shallow_epochs >= 0 && t.shallow_epochs <= t.baseline_epochs,
          "train.shallow_epochs must lie in [0, baseline_epochs]");
  require(t.e_warm >= 0, "train.e_warm must be >= 0");
  require(t.beta_m >= 0.0 && t.beta_m < 1.0, "train.beta_m must lie in [0, 1)");
  require(t.tau_reg >= 0.0, "train.tau_reg must be >= 0");
  const SelectorSettings& s = selector;
  require(s.n_proxies >= 1, "selector.n_proxies must be >= 1");
  require(s.pool_size >= 1, "selector.pool_size must be >= 1");
  require(s.select_k >= 1 && s.select_k <= s.pool_size, "selector.select_k must lie in [1, pool_size]");
  require(s.hidden >= 2, "selector.hidden must be >= 2");
  require(s.grpo.steps >= 0, "selector.steps must be >= 0");
  require(s.grpo.group_size >= 2, "selector.group_size must be >= 2");
  require(s.grpo.k_max >= 1, "selector.k_max must be >= 1");
  require(s.grpo.beta >= 0.0, "selector.beta must be >= 0");
  require(s.grpo.eps_clip > 0.0 && s.grpo.eps_clip < 1.0, "selector.eps_clip must lie in (0, 1)");
  require(s.grpo.eps_s > 0.0, "selector.eps_s must be > 0");
  require(s.grpo.lr > 0.0, "selector.policy_lr must be > 0");
  require(s.grpo.optimizer == "adam" || s.grpo.optimizer == "sgd", "selector.optimizer must be 'adam' or 'sgd'");
  require(s.grpo.threads >= 1 && s.grpo.threads <= 256, "selector.threads must lie in [1, 256]");
  require(s.retrieval.lambda >= 0.0, "selector.lambda must be >= 0");
  require(s.retrieval.wl_iterations >= 0, "selector.wl_iterations must be >= 0");
}

std::string RunConfig::to_json() const {
  const auto& g = selector.grpo;
  json j{
      {"seed", seed},
      {"property", property},
      {"bench",
       {{"k_total", bench.k_total},
        {"n_source", bench.n_source},
        {"task_threshold", bench.task_threshold},
        {"max_tasks", bench.max_tasks},
        {"min_scaffold_members", bench.min_scaffold_members},
        {"alpha_comp", bench.alpha_comp},
        {"tau_dist", bench.tau_dist},
        {"w1_projections", bench.w1_projections},
        {"kmeans_max_iterations", bench.kmeans_max_iterations},
        {"morgan_radius", bench.morgan_radius},
        {"descriptor_mode", bench.descriptor_mode == DescriptorMode::Blocks ? "blocks" : "summary"}}},
      {"encoder", {{"dim", encoder.dim}, {"layers", encoder.layers}}},
      {"train",
       {{"lr", train.lr},
        {"batch_size", train.batch_size},
        {"baseline_epochs", train.baseline_epochs},
        {"shallow_epochs", train.shallow_epochs},
        {"finetune_epochs", train.finetune_epochs},
        {"proxy_epochs", train.proxy_epochs},
        {"e_warm", train.e_warm},
        {"beta_m", train.beta_m},
        {"tau_reg", train.tau_reg}}},
      {"selector",
       {{"n_proxies", selector.n_proxies},
        {"pool_size", selector.pool_size},
        {"select_k", selector.select_k},
        {"hidden", selector.hidden},
        {"steps", g.steps},
        {"group_size", g.group_size},
        {"k_max", g.k_max},
        {"beta", g.beta},
        {"eps_clip", g.eps_clip},
        {"eps_s", g.eps_s},
        {"policy_lr", g.lr},
        {"optimizer", g.optimizer},
        {"threads", g.threads},
        {"lambda", selector.retrieval.lambda},
        {"tau_sim", selector.retrieval.tau_sim},
        {"wl_iterations", selector.retrieval.wl_iterations}}}};
  return j.dump(2);
}

AdaptConfig RunConfig::finetune_config(std::uint64_t run_seed) const {
  AdaptConfig a;
  a.epochs = train.finetune_epochs;
  a.batch_size = train.batch_size;
  a.lr = train.lr;
  a.e_warm = train.e_warm;
  a.beta_m = train.beta_m;
  a.tau_reg = train.tau_reg;
  a.seed = run_seed;
  return a;
}

std::filesystem::path resolve_config_path(const std::string& cli_value) {
  if (const char* env = std::getenv("OODMOL_CONFIG"); env && *env) return env;
  return cli_value;
}

}  // namespace oodmol
