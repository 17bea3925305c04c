#include "latentface/generator.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "latentface/error.hpp"
#include "latentface/kv.hpp"
#include "latentface/rng.hpp"

namespace latentface {

void UVMapSet::validate() const {
  require(shape.channels == 3 && normal.channels == 3 && texture.channels == 3, "UV maps must have 3 channels");
  require(shape.same_shape(normal) && shape.same_shape(texture), "UV maps must share H x W");
  require(shape.height > 0 && shape.width > 0, "UV maps are empty");
  require<InvalidData>(shape.all_finite(), "shape map has non-finite entries");
  require<InvalidData>(normal.all_finite(), "normal map has non-finite entries");
  require<InvalidData>(texture.all_finite(), "texture map has non-finite entries");
}

int GeneratorBackend::layer_width(std::string_view tap) const {
  for (const auto& layer : layers()) {
    if (layer.name == tap) {
      return layer.width;
    }
  }
  throw InvalidArgument("unknown tap layer '" + std::string(tap) + "'");
}

namespace {

constexpr char kWeightsMagic[8] = {'L', 'F', 'G', 'W', '0', '0', '0', '1'};

Eigen::MatrixXd gaussian_matrix(GaussianStream& stream, int rows, int cols, double stddev) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      m(r, c) = stddev * stream.next();
    }
  }
  return m;
}

// Template biases: a 120 degree cylindrical patch with a soft nose bump,
// its cylinder normals, and a flat skin tone.
void template_biases(int res, Eigen::VectorXd& shape, Eigen::VectorXd& normal, Eigen::VectorXd& texture) {
  shape.resize(res * res * 3);
  normal.resize(res * res * 3);
  texture.resize(res * res * 3);
  const double span = 2.0 * std::numbers::pi / 3.0;
  for (int i = 0; i < res; ++i) {
    for (int j = 0; j < res; ++j) {
      const double u = res > 1 ? static_cast<double>(j) / (res - 1) : 0.5;
      const double v = res > 1 ? static_cast<double>(i) / (res - 1) : 0.5;
      const double theta = (u - 0.5) * span;
      const double y = 1.0 - 2.0 * v;
      const double bump = 0.2 * std::exp(-(theta * theta / 0.1 + (y + 0.1) * (y + 0.1) / 0.15));
      const int base = (i * res + j) * 3;
      shape[base + 0] = std::sin(theta);
      shape[base + 1] = y;
      shape[base + 2] = std::cos(theta) - 1.0 + bump;
      normal[base + 0] = std::sin(theta);
      normal[base + 1] = 0.0;
      normal[base + 2] = std::cos(theta);
      texture[base + 0] = 0.78;
      texture[base + 1] = 0.6 - 0.05 * v;
      texture[base + 2] = 0.5;
    }
  }
}

Image to_image(const Eigen::VectorXd& flat, int res) {
  Image img(res, res, 3);
  std::memcpy(img.pixels.data(), flat.data(), sizeof(double) * img.pixels.size());
  return img;
}

Eigen::Map<const Eigen::VectorXd> as_vector(const Image& img) {
  return {img.pixels.data(), static_cast<Eigen::Index>(img.pixels.size())};
}

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
  const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v = m(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
}

Eigen::MatrixXd read_matrix(std::ifstream& in, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  std::uint32_t r = 0, c = 0;
  in.read(reinterpret_cast<char*>(&r), sizeof(r));
  in.read(reinterpret_cast<char*>(&c), sizeof(c));
  require<InvalidData>(in && r == rows && c == cols,
                       "weights file: tensor " + what + " has shape " + std::to_string(r) + "x" + std::to_string(c) +
                           ", manifest implies " + std::to_string(rows) + "x" + std::to_string(cols));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      m(i, j) = v;
    }
  }
  require<InvalidData>(static_cast<bool>(in), "weights file truncated in tensor " + what);
  return m;
}

} // namespace

ReferenceGenerator::ReferenceGenerator(const ReferenceGeneratorConfig& config) : config_(config) {
  require(config_.latent_dim > 0, "generator latent_dim must be positive");
  require(!config_.layers.empty(), "generator needs at least one trunk layer");
  require(config_.uv_resolution >= 2, "generator uv_resolution must be at least 2");
  for (const auto& layer : config_.layers) {
    require(layer.width > 0 && !layer.name.empty(), "generator layer '" + layer.name + "' is malformed");
  }

  GaussianStream stream(mix_seed(config_.seed, 0x6e6574));
  int fan_in = config_.latent_dim + kExpressionSlots;
  for (const auto& layer : config_.layers) {
    trunk_weights_.push_back(gaussian_matrix(stream, layer.width, fan_in, 1.0 / std::sqrt(fan_in)));
    trunk_bias_.push_back(0.1 * gaussian_matrix(stream, layer.width, 1, 1.0).col(0));
    fan_in = layer.width;
  }

  const int res = config_.uv_resolution;
  const int out = res * res * 3;
  template_biases(res, branch_bias_[0], branch_bias_[1], branch_bias_[2]);
  const double scales[3] = {config_.shape_scale, config_.normal_scale, config_.texture_scale};
  for (int b = 0; b < 3; ++b) {
    branch_weights_[b] = gaussian_matrix(stream, out, fan_in, scales[b] / std::sqrt(fan_in));
  }
}

int ReferenceGenerator::layer_index(std::string_view tap) const {
  for (std::size_t i = 0; i < config_.layers.size(); ++i) {
    if (config_.layers[i].name == tap) {
      return static_cast<int>(i);
    }
  }
  throw InvalidArgument("unknown tap layer '" + std::string(tap) + "'");
}

Eigen::VectorXd ReferenceGenerator::input_vector(const LatentCode& z, const ExpressionVector& e) const {
  require(z.dim() == config_.latent_dim,
          "latent dimension " + std::to_string(z.dim()) + " does not match generator d=" +
              std::to_string(config_.latent_dim));
  Eigen::VectorXd x(config_.latent_dim + kExpressionSlots);
  x << z.values, e.weights();
  return x;
}

Eigen::VectorXd ReferenceGenerator::activate(const Eigen::VectorXd& pre) const {
  if (config_.activation == Activation::linear) {
    return pre;
  }
  return pre.array().tanh().matrix();
}

UVMapSet ReferenceGenerator::run_branches(const Eigen::VectorXd& trunk_out) const {
  const int res = config_.uv_resolution;
  UVMapSet maps;
  maps.shape = to_image(branch_weights_[0] * trunk_out + branch_bias_[0], res);
  maps.normal = to_image(branch_weights_[1] * trunk_out + branch_bias_[1], res);
  maps.texture = to_image(branch_weights_[2] * trunk_out + branch_bias_[2], res);
  return maps;
}

IntermediateCode ReferenceGenerator::partial_forward(
    const LatentCode& z,
    const ExpressionVector& e,
    std::string_view tap) const {
  const int stop = layer_index(tap);
  Eigen::VectorXd h = input_vector(z, e);
  for (int k = 0; k <= stop; ++k) {
    h = activate(trunk_weights_[k] * h + trunk_bias_[k]);
  }
  return {std::move(h), std::string(tap)};
}

UVMapSet ReferenceGenerator::forward_from_intermediate(const IntermediateCode& c) const {
  const int start = layer_index(c.tap_layer);
  require(c.dim() == config_.layers[start].width,
          "intermediate code width " + std::to_string(c.dim()) + " does not match layer '" + c.tap_layer + "'");
  Eigen::VectorXd h = c.values;
  for (std::size_t k = start + 1; k < trunk_weights_.size(); ++k) {
    h = activate(trunk_weights_[k] * h + trunk_bias_[k]);
  }
  return run_branches(h);
}

UVMapSet ReferenceGenerator::forward(const LatentCode& z, const ExpressionVector& e) const {
  Eigen::VectorXd h = input_vector(z, e);
  for (std::size_t k = 0; k < trunk_weights_.size(); ++k) {
    h = activate(trunk_weights_[k] * h + trunk_bias_[k]);
  }
  return run_branches(h);
}

Eigen::VectorXd ReferenceGenerator::forward_from_intermediate_vjp(
    const IntermediateCode& c,
    const UVMapSet& grad_maps) const {
  const int start = layer_index(c.tap_layer);
  require(c.dim() == config_.layers[start].width, "intermediate code width does not match tap layer");
  const int res = config_.uv_resolution;
  require(grad_maps.shape.height == res && grad_maps.shape.width == res && grad_maps.normal.same_shape(grad_maps.shape) &&
              grad_maps.texture.same_shape(grad_maps.shape),
          "gradient maps do not match generator resolution");

  // Re-run the tail of the trunk, keeping each layer's output.
  std::vector<Eigen::VectorXd> outputs{c.values};
  for (std::size_t k = start + 1; k < trunk_weights_.size(); ++k) {
    outputs.push_back(activate(trunk_weights_[k] * outputs.back() + trunk_bias_[k]));
  }

  Eigen::VectorXd grad = branch_weights_[0].transpose() * as_vector(grad_maps.shape) +
                         branch_weights_[1].transpose() * as_vector(grad_maps.normal) +
                         branch_weights_[2].transpose() * as_vector(grad_maps.texture);
  for (int k = static_cast<int>(trunk_weights_.size()) - 1; k > start; --k) {
    const Eigen::VectorXd& out = outputs[k - start];
    if (config_.activation == Activation::tanh) {
      grad = grad.cwiseProduct((1.0 - out.array().square()).matrix());
    }
    grad = trunk_weights_[k].transpose() * grad;
  }
  return grad;
}

LatentGradient ReferenceGenerator::partial_forward_vjp(
    const LatentCode& z,
    const ExpressionVector& e,
    std::string_view tap,
    const Eigen::VectorXd& grad_c) const {
  const int stop = layer_index(tap);
  require(grad_c.size() == config_.layers[stop].width, "gradient width does not match tap layer");
  std::vector<Eigen::VectorXd> outputs{input_vector(z, e)};
  for (int k = 0; k <= stop; ++k) {
    outputs.push_back(activate(trunk_weights_[k] * outputs.back() + trunk_bias_[k]));
  }
  Eigen::VectorXd grad = grad_c;
  for (int k = stop; k >= 0; --k) {
    if (config_.activation == Activation::tanh) {
      grad = grad.cwiseProduct((1.0 - outputs[k + 1].array().square()).matrix());
    }
    grad = trunk_weights_[k].transpose() * grad;
  }
  LatentGradient result;
  result.z = grad.head(config_.latent_dim);
  result.e = grad.tail<kExpressionSlots>();
  return result;
}

void ReferenceGenerator::save_weights(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  require<IoError>(static_cast<bool>(out), "cannot write " + path.string());
  out.write(kWeightsMagic, sizeof(kWeightsMagic));
  const std::uint32_t count = static_cast<std::uint32_t>(2 * trunk_weights_.size() + 6);
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (std::size_t k = 0; k < trunk_weights_.size(); ++k) {
    write_matrix(out, trunk_weights_[k]);
    write_matrix(out, trunk_bias_[k]);
  }
  for (int b = 0; b < 3; ++b) {
    write_matrix(out, branch_weights_[b]);
    write_matrix(out, branch_bias_[b]);
  }
  require<IoError>(static_cast<bool>(out), "write failed for " + path.string());
}

void ReferenceGenerator::load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require<IoError>(static_cast<bool>(in), "cannot open weights file " + path.string());
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  require<InvalidData>(in && std::memcmp(magic, kWeightsMagic, sizeof(magic)) == 0,
                       path.string() + " is not a generator weights file");
  std::uint32_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  require<InvalidData>(count == 2 * trunk_weights_.size() + 6, "weights file tensor count does not match manifest");
  for (std::size_t k = 0; k < trunk_weights_.size(); ++k) {
    const std::string name = config_.layers[k].name;
    trunk_weights_[k] = read_matrix(in, trunk_weights_[k].rows(), trunk_weights_[k].cols(), name + ".weight");
    trunk_bias_[k] = read_matrix(in, trunk_bias_[k].rows(), 1, name + ".bias").col(0);
  }
  const char* names[3] = {"shape", "normal", "texture"};
  for (int b = 0; b < 3; ++b) {
    branch_weights_[b] =
        read_matrix(in, branch_weights_[b].rows(), branch_weights_[b].cols(), std::string(names[b]) + ".weight");
    branch_bias_[b] = read_matrix(in, branch_bias_[b].rows(), 1, std::string(names[b]) + ".bias").col(0);
  }
}

namespace {

std::string format_layers(const std::vector<LayerInfo>& layers) {
  std::string out;
  for (const auto& layer : layers) {
    if (!out.empty()) {
      out += ',';
    }
    out += layer.name + ":" + std::to_string(layer.width);
  }
  return out;
}

std::vector<LayerInfo> parse_layers(const std::string& text) {
  std::vector<LayerInfo> layers;
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    require(parts.size() == 2 && !parts[0].empty(), "malformed layer entry '" + item + "' (expected name:width)");
    layers.push_back({parts[0], static_cast<int>(parse_int(parts[1]))});
  }
  return layers;
}

} // namespace

std::unique_ptr<GeneratorBackend> load_generator(const std::filesystem::path& manifest_path) {
  require(std::filesystem::is_regular_file(manifest_path),
          "backend manifest not found: " + manifest_path.string());
  const auto doc = KeyValueDocument::load(manifest_path);
  const std::string backend = doc.get("backend").value_or("reference");
  require(backend == "reference",
          "backend '" + backend + "' is not built in; only 'reference' generators can be loaded");

  ReferenceGeneratorConfig config;
  config.latent_dim = static_cast<int>(doc.require_int("latent_dim"));
  const long long expression_dim = doc.get_int("expression_dim", kExpressionSlots);
  require(expression_dim == kExpressionSlots, "expression_dim must be 7");
  config.layers = parse_layers(doc.require("layers"));
  config.uv_resolution = static_cast<int>(doc.require_int("uv_resolution"));
  const std::string activation = doc.get("activation").value_or("tanh");
  require(activation == "tanh" || activation == "linear", "activation must be 'tanh' or 'linear'");
  config.activation = activation == "tanh" ? Activation::tanh : Activation::linear;
  config.seed = static_cast<std::uint64_t>(doc.get_int("seed", 1234));

  auto generator = std::make_unique<ReferenceGenerator>(config);
  if (const auto weights = doc.get("weights")) {
    std::filesystem::path weights_path(*weights);
    if (weights_path.is_relative()) {
      weights_path = manifest_path.parent_path() / weights_path;
    }
    generator->load_weights(weights_path);
  }
  return generator;
}

std::filesystem::path write_reference_backend(
    const ReferenceGeneratorConfig& config,
    const std::filesystem::path& dir,
    const std::string& stem) {
  std::filesystem::create_directories(dir);
  const ReferenceGenerator generator(config);
  const auto weights_path = dir / (stem + ".weights");
  generator.save_weights(weights_path);

  KeyValueDocument doc;
  doc.set("backend", std::string("reference"));
  doc.set("latent_dim", config.latent_dim);
  doc.set("expression_dim", kExpressionSlots);
  doc.set("layers", format_layers(config.layers));
  doc.set("uv_resolution", config.uv_resolution);
  doc.set("activation", std::string(config.activation == Activation::tanh ? "tanh" : "linear"));
  doc.set("seed", static_cast<long long>(config.seed));
  doc.set("weights", weights_path.filename().string());
  const auto manifest_path = dir / (stem + ".manifest");
  doc.save(manifest_path);
  return manifest_path;
}

} // namespace latentface
