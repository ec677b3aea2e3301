#include "survanchor/cli/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <type_traits>

#include "survanchor/error.hpp"

namespace survanchor::cli {
namespace {

using json = nlohmann::json;
namespace pt = boost::property_tree;

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorCode::InvalidArgument, "config: " + msg);
}

std::vector<std::string> split_list(const std::string& text, const char* seps = ",") {
  std::vector<std::string> parts;
  if (boost::algorithm::trim_copy(text).empty()) return parts;
  boost::algorithm::split(parts, text, boost::algorithm::is_any_of(seps));
  for (auto& p : parts) boost::algorithm::trim(p);
  return parts;
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T value{};
  in >> value;
  const bool negative_unsigned =
      std::is_unsigned_v<T> && text.find('-') != std::string::npos;
  if (in.fail() || !(in >> std::ws).eof() || negative_unsigned) {
    config_error(fmt::format("'{}' has an invalid value '{}'", key, text));
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = boost::algorithm::to_lower_copy(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  config_error(fmt::format("'{}' expects a boolean, got '{}'", key, text));
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& part : split_list(text)) out.push_back(parse_value<T>(key, part));
  if (out.empty()) config_error(fmt::format("'{}' must not be empty", key));
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& text) {
  std::filesystem::path p(text);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"data", {"csv", "schema", "time_col", "event_col", "id_col", "exclude"}},
      {"synthetic",
       {"n", "dim", "class_means", "time_variance", "censor_quantile", "center_radius",
        "spread", "seed"}},
      {"split", {"fractions", "seed"}},
      {"train",
       {"batch_sizes", "learning_rates", "layers", "embedding_dims", "max_epochs", "patience",
        "final_activation", "full_batch", "threads", "seed"}},
      {"cluster", {"kind", "k_min", "k_max", "k", "tol", "max_iter", "seed"}},
      {"anchors",
       {"bins", "alpha", "concepts", "clusters", "sample_size", "clumping_warn",
        "group_column", "display_times"}},
      {"assoc", {"test", "fdr_q"}},
      {"output", {"dir"}},
  };
  return keys;
}

}  // namespace

ConceptFilter ConceptFilter::parse(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    config_error("concept filter '" + text + "' is not of the form column=value");
  }
  return {boost::algorithm::trim_copy(text.substr(0, eq)),
          boost::algorithm::trim_copy(text.substr(eq + 1))};
}

void RunConfig::set_seed(std::uint64_t seed) {
  synthetic.seed = seed;
  split_seed = seed;
  train.seed = seed;
  cluster.seed = seed;
}

void RunConfig::validate() const {
  synthetic.validate();
  train.validate();
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw Error(ErrorCode::BadFractions, "split fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::BadFractions, fmt::format("split fractions sum to {}", total));
  }
  if (cluster.k_min < 1 || cluster.k_max < cluster.k_min) {
    config_error("cluster k range must satisfy 1 <= k_min <= k_max");
  }
  if (cluster.k && *cluster.k < 1) config_error("cluster k must be >= 1");
  if (anchors.bins < 1) config_error("anchors.bins must be >= 1");
  if (!(anchors.alpha > 0.0 && anchors.alpha <= 1.0)) config_error("anchors.alpha must be in (0, 1]");
  if (anchors.sample_size < 1) config_error("anchors.sample_size must be >= 1");
  if (anchors.display_times < 2) config_error("anchors.display_times must be >= 2");
  if (assoc.fdr_q && !(*assoc.fdr_q > 0.0 && *assoc.fdr_q < 1.0)) {
    throw Error(ErrorCode::BadQ, "assoc.fdr_q must be in (0, 1)");
  }
  if (data.csv && !std::filesystem::exists(*data.csv)) {
    throw Error(ErrorCode::InvalidArgument, "data.csv does not exist: " + data.csv->string());
  }
  if (data.schema && !std::filesystem::exists(*data.schema)) {
    throw Error(ErrorCode::InvalidArgument,
                "data.schema does not exist: " + data.schema->string());
  }
}

json RunConfig::to_json() const {
  json concepts = json::array();
  for (const auto& c : anchors.concepts) concepts.push_back(c.name());
  return {
      {"data",
       {{"csv", data.csv ? json(data.csv->generic_string()) : json(nullptr)},
        {"schema", data.schema ? json(data.schema->generic_string()) : json(nullptr)},
        {"time_col", data.csv_options.time_col},
        {"event_col", data.csv_options.event_col},
        {"id_col", data.csv_options.id_col ? json(*data.csv_options.id_col) : json(nullptr)},
        {"exclude", data.exclude}}},
      {"synthetic",
       {{"n", synthetic.n},
        {"dim", synthetic.dim},
        {"class_means", synthetic.class_means},
        {"time_variance", synthetic.time_variance},
        {"censor_quantile", synthetic.censor_quantile},
        {"center_radius", synthetic.center_radius},
        {"spread", synthetic.spread},
        {"seed", synthetic.seed}}},
      {"split", {{"fractions", fractions}, {"seed", split_seed}}},
      {"train",
       {{"batch_sizes", train.batch_sizes},
        {"learning_rates", train.learning_rates},
        {"layers", train.layer_counts},
        {"embedding_dims", train.embedding_dims},
        {"max_epochs", train.max_epochs},
        {"patience", train.patience},
        {"final_activation", coxnet::to_string(train.final_activation)},
        {"full_batch", train.full_batch},
        {"seed", train.seed}}},
      {"cluster",
       {{"kind", clusterlib::to_string(cluster.kind)},
        {"k_min", cluster.k_min},
        {"k_max", cluster.k_max},
        {"k", cluster.k ? json(*cluster.k) : json(nullptr)},
        {"tol", cluster.tol},
        {"max_iter", cluster.max_iter},
        {"seed", cluster.seed}}},
      {"anchors",
       {{"bins", anchors.bins},
        {"alpha", anchors.alpha},
        {"concepts", concepts},
        {"clusters", anchors.clusters},
        {"sample_size", anchors.sample_size},
        {"clumping_warn", anchors.clumping_warn},
        {"group_column", anchors.group_column},
        {"display_times", anchors.display_times}}},
      {"assoc",
       {{"test", assoc::to_string(assoc.test)},
        {"fdr_q", assoc.fdr_q ? json(*assoc.fdr_q) : json(nullptr)}}},
  };
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

std::string RunConfig::hash() const {
  return fnv1a_hex(to_json().dump());
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    config_error(e.message() + fmt::format(" (line {})", e.line()));
  }
  RunConfig cfg;
  cfg.synthetic.class_means = data::kDigitMeans;
  const auto& keys = known_keys();
  for (const auto& [section, body] : tree) {
    const auto known = keys.find(section);
    if (known == keys.end()) {
      if (!body.data().empty()) config_error("key '" + section + "' must be inside a section");
      config_error("unknown section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      if (!known->second.count(key)) config_error("unknown key '" + section + "." + key + "'");
      const std::string value = boost::algorithm::trim_copy(node.data());
      const std::string full = section + "." + key;
      if (section == "data") {
        if (key == "csv") cfg.data.csv = resolve(base_dir, value);
        else if (key == "schema") cfg.data.schema = resolve(base_dir, value);
        else if (key == "time_col") cfg.data.csv_options.time_col = value;
        else if (key == "event_col") cfg.data.csv_options.event_col = value;
        else if (key == "id_col") {
          if (!value.empty()) cfg.data.csv_options.id_col = value;
        } else if (key == "exclude") cfg.data.exclude = split_list(value);
      } else if (section == "synthetic") {
        auto& s = cfg.synthetic;
        if (key == "n") s.n = parse_value<std::size_t>(full, value);
        else if (key == "dim") s.dim = parse_value<std::size_t>(full, value);
        else if (key == "class_means") s.class_means = parse_list<double>(full, value);
        else if (key == "time_variance") s.time_variance = parse_value<double>(full, value);
        else if (key == "censor_quantile") s.censor_quantile = parse_value<double>(full, value);
        else if (key == "center_radius") s.center_radius = parse_value<double>(full, value);
        else if (key == "spread") s.spread = parse_value<double>(full, value);
        else if (key == "seed") s.seed = parse_value<std::uint64_t>(full, value);
      } else if (section == "split") {
        if (key == "fractions") {
          const auto f = parse_list<double>(full, value);
          if (f.size() != 4) {
            throw Error(ErrorCode::BadFractions, "split.fractions needs exactly 4 values");
          }
          std::copy(f.begin(), f.end(), cfg.fractions.begin());
        } else if (key == "seed") {
          cfg.split_seed = parse_value<std::uint64_t>(full, value);
        }
      } else if (section == "train") {
        auto& t = cfg.train;
        if (key == "batch_sizes") t.batch_sizes = parse_list<std::size_t>(full, value);
        else if (key == "learning_rates") t.learning_rates = parse_list<double>(full, value);
        else if (key == "layers") t.layer_counts = parse_list<std::size_t>(full, value);
        else if (key == "embedding_dims") t.embedding_dims = parse_list<std::size_t>(full, value);
        else if (key == "max_epochs") t.max_epochs = parse_value<std::size_t>(full, value);
        else if (key == "patience") t.patience = parse_value<std::size_t>(full, value);
        else if (key == "final_activation") t.final_activation = coxnet::parse_final_activation(value);
        else if (key == "full_batch") t.full_batch = parse_bool(full, value);
        else if (key == "threads") t.threads = parse_value<std::size_t>(full, value);
        else if (key == "seed") t.seed = parse_value<std::uint64_t>(full, value);
      } else if (section == "cluster") {
        auto& c = cfg.cluster;
        if (key == "kind") c.kind = clusterlib::parse_mixture_kind(value);
        else if (key == "k_min") c.k_min = parse_value<std::size_t>(full, value);
        else if (key == "k_max") c.k_max = parse_value<std::size_t>(full, value);
        else if (key == "k") {
          if (!value.empty()) c.k = parse_value<std::size_t>(full, value);
        } else if (key == "tol") c.tol = parse_value<double>(full, value);
        else if (key == "max_iter") c.max_iter = parse_value<std::size_t>(full, value);
        else if (key == "seed") c.seed = parse_value<std::uint64_t>(full, value);
      } else if (section == "anchors") {
        auto& a = cfg.anchors;
        if (key == "bins") a.bins = parse_value<std::size_t>(full, value);
        else if (key == "alpha") a.alpha = parse_value<double>(full, value);
        else if (key == "concepts") {
          for (const auto& c : split_list(value, ";")) a.concepts.push_back(ConceptFilter::parse(c));
        } else if (key == "clusters") a.clusters = parse_bool(full, value);
        else if (key == "sample_size") a.sample_size = parse_value<std::size_t>(full, value);
        else if (key == "clumping_warn") a.clumping_warn = parse_value<double>(full, value);
        else if (key == "group_column") a.group_column = value;
        else if (key == "display_times") a.display_times = parse_value<std::size_t>(full, value);
      } else if (section == "assoc") {
        if (key == "test") cfg.assoc.test = assoc::parse_test_kind(value);
        else if (key == "fdr_q") {
          if (!value.empty()) cfg.assoc.fdr_q = parse_value<double>(full, value);
        }
      } else if (section == "output") {
        cfg.out = resolve(base_dir, value);
      }
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.has_parent_path() ? path.parent_path() : ".");
}

}  // namespace survanchor::cli
