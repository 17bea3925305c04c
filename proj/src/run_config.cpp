#include "latentface/run_config.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "latentface/error.hpp"

namespace latentface {

namespace {

constexpr const char* kBuiltin = "builtin";

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += (i ? "," : "") + format_double(values[i]);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
  std::vector<double> values;
  for (const auto& part : split(text, ',')) {
    const std::string item = trim(part);
    require(!item.empty(), key + ": empty list entry in '" + text + "'");
    values.push_back(parse_double(item));
  }
  return values;
}

std::uint64_t parse_seed(const std::string& text) {
  std::uint64_t value = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  require(ec == std::errc() && ptr == end, "seed: not an unsigned integer: '" + text + "'");
  return value;
}

std::filesystem::path optional_path(const std::string& text) {
  return text == kBuiltin ? std::filesystem::path() : std::filesystem::path(text);
}

// Collects `<prefix>.<index>` entries in index order.
std::optional<std::vector<std::string>> indexed(const KeyValueDocument& doc, const std::string& prefix) {
  std::map<long long, std::string> found;
  for (const auto& [key, value] : doc.entries()) {
    if (key.rfind(prefix + ".", 0) == 0) {
      found[parse_int(key.substr(prefix.size() + 1))] = value;
    }
  }
  if (found.empty()) {
    return std::nullopt;
  }
  std::vector<std::string> values;
  for (auto& [index, value] : found) {
    require(index == static_cast<long long>(values.size()), prefix + ": indices must run 0, 1, 2, ...");
    values.push_back(std::move(value));
  }
  return values;
}

void require_file(const std::filesystem::path& path, const std::string& what) {
  require(std::filesystem::is_regular_file(path), what + " not found: " + path.string());
}

} // namespace

const char* command_name(Command command) {
  switch (command) {
    case Command::manipulate: return "manipulate";
    case Command::apply: return "apply";
    case Command::pca: return "pca";
    case Command::eval: return "eval";
  }
  return "?";
}

ExpressionVector parse_expression(const std::string& name) {
  static const std::map<std::string, Expression> names = {
      {"happy", Expression::happy},         {"angry", Expression::angry},   {"sad", Expression::sad},
      {"afraid", Expression::afraid},       {"disgusted", Expression::disgusted},
      {"surprised", Expression::surprised},
  };
  if (name == "neutral") {
    return ExpressionVector::neutral();
  }
  const auto it = names.find(name);
  require(it != names.end(), "unknown expression '" + name +
                                 "' (neutral, happy, angry, sad, afraid, disgusted, surprised)");
  return ExpressionVector::one_hot(it->second);
}

KeyValueDocument RunConfig::to_document() const {
  KeyValueDocument doc;
  doc.set("backend", backend.string());
  doc.set("embedder", embedder.empty() ? std::string(kBuiltin) : embedder.string());
  doc.set("id_embedder", id_embedder.empty() ? std::string(kBuiltin) : id_embedder.string());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    doc.set("prompt." + std::to_string(i), prompts[i]);
  }
  if (!target_image.empty()) {
    doc.set("target_image", target_image.string());
  }
  if (!templates.empty()) {
    doc.set("templates", templates.string());
  }
  doc.set("lambda_id", weights.lambda_id);
  doc.set("lambda_l2", weights.lambda_l2);
  doc.set("steps", steps);
  doc.set("lr", learning_rate);
  if (!layer.empty()) {
    doc.set("layer", layer);
  }
  doc.set("seed", std::to_string(seed));
  doc.set("views", join_doubles(views));
  doc.set("image_size", image_size);
  doc.set("expression", expression);
  doc.set("out", out.string());
  doc.set("jobs", jobs);
  if (!direction.empty()) {
    doc.set("direction", direction.string());
  }
  if (!alphas.empty()) {
    doc.set("alphas", join_doubles(alphas));
  }
  doc.set("samples", samples);
  doc.set("components", components);
  for (std::size_t i = 0; i < original_renders.size(); ++i) {
    doc.set("original." + std::to_string(i), original_renders[i].string());
  }
  for (std::size_t i = 0; i < manipulated_renders.size(); ++i) {
    doc.set("manipulated." + std::to_string(i), manipulated_renders[i].string());
  }
  return doc;
}

void RunConfig::apply_document(const KeyValueDocument& doc) {
  static const char* const known[] = {
      "backend", "embedder", "id_embedder", "target_image", "templates", "lambda_id", "lambda_l2",
      "steps",   "lr",       "layer",       "seed",         "views",     "image_size", "expression",
      "out",     "jobs",     "direction",   "alphas",       "samples",   "components",
  };
  for (const auto& [key, value] : doc.entries()) {
    if (key.rfind("run.", 0) == 0 || key.rfind("prompt.", 0) == 0 || key.rfind("original.", 0) == 0 ||
        key.rfind("manipulated.", 0) == 0) {
      continue;
    }
    bool ok = false;
    for (const char* name : known) {
      ok = ok || key == name;
    }
    require(ok, "unknown configuration key '" + key + "'");
  }

  if (auto v = doc.get("backend")) backend = *v;
  if (auto v = doc.get("embedder")) embedder = optional_path(*v);
  if (auto v = doc.get("id_embedder")) id_embedder = optional_path(*v);
  if (auto v = doc.get("target_image")) target_image = *v;
  if (auto v = doc.get("templates")) templates = *v;
  if (doc.contains("lambda_id")) weights.lambda_id = doc.require_double("lambda_id");
  if (doc.contains("lambda_l2")) weights.lambda_l2 = doc.require_double("lambda_l2");
  if (doc.contains("steps")) steps = static_cast<int>(doc.require_int("steps"));
  if (doc.contains("lr")) learning_rate = doc.require_double("lr");
  if (auto v = doc.get("layer")) layer = *v;
  if (auto v = doc.get("seed")) seed = parse_seed(*v);
  if (auto v = doc.get("views")) views = parse_doubles("views", *v);
  if (doc.contains("image_size")) image_size = static_cast<int>(doc.require_int("image_size"));
  if (auto v = doc.get("expression")) expression = *v;
  if (auto v = doc.get("out")) out = *v;
  if (doc.contains("jobs")) jobs = static_cast<int>(doc.require_int("jobs"));
  if (auto v = doc.get("direction")) direction = *v;
  if (auto v = doc.get("alphas")) alphas = parse_doubles("alphas", *v);
  if (doc.contains("samples")) samples = static_cast<int>(doc.require_int("samples"));
  if (doc.contains("components")) components = static_cast<int>(doc.require_int("components"));
  if (auto v = indexed(doc, "prompt")) prompts = *v;
  if (auto v = indexed(doc, "original")) original_renders.assign(v->begin(), v->end());
  if (auto v = indexed(doc, "manipulated")) manipulated_renders.assign(v->begin(), v->end());
}

std::vector<double> RunConfig::resolved_alphas(Command command) const {
  if (!alphas.empty()) {
    return alphas;
  }
  if (command == Command::pca) {
    return {kDefaultPcaStep};
  }
  return {0.0, 1.0, 2.0, 3.0};
}

void RunConfig::validate(Command command) const {
  const std::string name = command_name(command);
  if (!embedder.empty()) require_file(embedder, "embedder manifest");
  if (!id_embedder.empty()) require_file(id_embedder, "identity embedder manifest");
  require(jobs >= 0, "jobs must be >= 0");
  require(image_size >= 8 && image_size <= 4096, "image_size must be in [8, 4096]");
  require(!views.empty(), "at least one view yaw is required");
  for (double yaw : views) {
    require(std::isfinite(yaw), "view yaws must be finite");
  }
  for (double alpha : alphas) {
    require(std::isfinite(alpha), "alphas must be finite");
  }
  if (command != Command::eval) {
    require(!backend.empty(), name + ": --backend is required");
    require_file(backend, "backend manifest");
    parse_expression(expression);
  }

  const bool has_text = !prompts.empty();
  const bool has_image = !target_image.empty();
  switch (command) {
    case Command::manipulate:
      require(has_text != has_image, "manipulate: give either --prompt or --target-image, not both");
      weights.validate();
      require(steps > 0, "steps must be positive");
      require(std::isfinite(learning_rate) && learning_rate > 0.0, "lr must be positive");
      break;
    case Command::apply:
      require(!direction.empty(), "apply: --direction is required");
      require_file(direction, "direction record");
      require(std::set<double>(alphas.begin(), alphas.end()).size() == alphas.size(), "apply: duplicate alpha");
      break;
    case Command::pca:
      require(samples >= 2, "pca: --samples must be >= 2");
      require(components >= 1 && components < samples, "pca: --components must be in [1, samples - 1]");
      require(alphas.size() <= 1, "pca: --alpha takes a single step size");
      break;
    case Command::eval:
      require(!original_renders.empty(), "eval: no original renders given");
      require(original_renders.size() == manipulated_renders.size(),
              "eval: original and manipulated render lists differ in length");
      for (const auto& p : original_renders) require_file(p, "render");
      for (const auto& p : manipulated_renders) require_file(p, "render");
      require(has_text != has_image, "eval: give either --prompt or --target-image, not both");
      break;
  }
  if (has_text) {
    for (const auto& p : prompts) {
      require(!trim(p).empty(), "prompts must not be empty");
    }
  }
  if (has_image) require_file(target_image, "target image");
  if (!templates.empty()) require_file(templates, "template file");
}

} // namespace latentface
