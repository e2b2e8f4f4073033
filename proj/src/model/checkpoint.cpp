#include "ggrnet/model/checkpoint.hpp"

#include "ggrnet/errors.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ggrnet::model {

namespace {

constexpr char magic[8] = {'G', 'G', 'R', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t format_version = 1;
constexpr std::string_view normalizer_name = "normalizer";

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(std::string_view in, std::size_t& pos) {
  if (in.size() - pos < sizeof(U)) throw ConfigError("checkpoint is truncated");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(U);
  return v;
}

void put_matrix(std::string& out, const Mat& m) {
  for (ad::Index i = 0; i < m.size(); ++i) put_le(out, std::bit_cast<std::uint64_t>(m.data()[i]));
}

Mat get_matrix(std::string_view in, std::size_t& pos, ad::Index rows, ad::Index cols) {
  Mat m(rows, cols);
  for (ad::Index i = 0; i < m.size(); ++i) m.data()[i] = std::bit_cast<double>(get_le<std::uint64_t>(in, pos));
  if (!m.allFinite()) throw ConfigError("checkpoint contains non-finite values");
  return m;
}

nlohmann::ordered_json config_json(const ModelConfig& c) {
  return {{"d_atom", c.d_atom},
          {"d_count", c.d_count},
          {"d_h", c.d_h},
          {"T", c.steps},
          {"use_count_feature", c.use_count_feature},
          {"use_distance_feature", c.use_distance_feature},
          {"use_atom_embedding", c.use_atom_embedding},
          {"epsilon_distance", c.epsilon_distance}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.d_atom = j.at("d_atom").get<std::size_t>();
  c.d_count = j.at("d_count").get<std::size_t>();
  c.d_h = j.at("d_h").get<std::size_t>();
  c.steps = j.at("T").get<std::size_t>();
  c.use_count_feature = j.at("use_count_feature").get<bool>();
  c.use_distance_feature = j.at("use_distance_feature").get<bool>();
  c.use_atom_embedding = j.at("use_atom_embedding").get<bool>();
  c.epsilon_distance = j.at("epsilon_distance").get<double>();
  return c;
}

/// Expected shape of each parameter tensor for a configuration.
std::array<std::pair<ad::Index, ad::Index>, ModelParams::tensor_count> expected_shapes(const ModelConfig& c,
                                                                                        std::size_t vocab,
                                                                                        std::size_t count_rows) {
  const auto h = static_cast<ad::Index>(c.d_h);
  const auto in = static_cast<ad::Index>(c.input_width());
  const auto mlp = static_cast<ad::Index>(c.mlp_width());
  return {{{static_cast<ad::Index>(vocab), static_cast<ad::Index>(c.d_atom)},
           {static_cast<ad::Index>(count_rows), static_cast<ad::Index>(c.d_count)},
           {h, in},
           {h, 1},
           {h, in},
           {h, 1},
           {mlp, h},
           {mlp, 1},
           {mlp, mlp},
           {mlp, 1},
           {1, mlp},
           {1, 1}}};
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const auto tensors = ckpt.params.tensors();
  const auto shapes = expected_shapes(ckpt.config, ckpt.vocab.size(), ckpt.count_rows());
  nlohmann::ordered_json layout = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < ModelParams::tensor_count; ++i) {
    if (tensors[i]->rows() != shapes[i].first || tensors[i]->cols() != shapes[i].second)
      throw DimensionError("serialize_checkpoint: " + std::string(ModelParams::names()[i]) + " is " +
                           ad::shape_string(tensors[i]->rows(), tensors[i]->cols()) + ", expected " +
                           ad::shape_string(shapes[i].first, shapes[i].second));
    layout.push_back({{"name", ModelParams::names()[i]}, {"rows", tensors[i]->rows()}, {"cols", tensors[i]->cols()}});
  }
  layout.push_back({{"name", normalizer_name}, {"rows", 1}, {"cols", 2}});

  const nlohmann::ordered_json header = {{"config", config_json(ckpt.config)},
                                         {"vocabulary", ckpt.vocab.symbols()},
                                         {"property", ckpt.property},
                                         {"unit", ckpt.unit},
                                         {"epoch", ckpt.epoch},
                                         {"tensors", layout}};
  const std::string text = header.dump();

  std::string out(magic, sizeof(magic));
  put_le(out, format_version);
  put_le(out, static_cast<std::uint64_t>(text.size()));
  out += text;
  for (const auto* t : tensors) put_matrix(out, t->value);
  put_le(out, std::bit_cast<std::uint64_t>(ckpt.normalizer.mean()));
  put_le(out, std::bit_cast<std::uint64_t>(ckpt.normalizer.stddev()));
  put_le(out, fnv1a(out));
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof(magic) + 4 + 8 + 8 || std::memcmp(bytes.data(), magic, sizeof(magic)) != 0)
    throw ConfigError("not a checkpoint file (bad magic)");
  std::size_t tail = bytes.size() - 8;
  const std::uint64_t stored = get_le<std::uint64_t>(bytes, tail);
  if (stored != fnv1a(bytes.substr(0, bytes.size() - 8))) throw ConfigError("checkpoint checksum mismatch");
  const std::string_view body = bytes.substr(0, bytes.size() - 8);

  std::size_t pos = sizeof(magic);
  const auto version = get_le<std::uint32_t>(body, pos);
  if (version != format_version)
    throw ConfigError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                      std::to_string(format_version) + ")");
  const auto header_len = get_le<std::uint64_t>(body, pos);
  if (body.size() - pos < header_len) throw ConfigError("checkpoint is truncated");

  Checkpoint ck;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(body.substr(pos, header_len));
    ck.config = config_from_json(header.at("config"));
    ck.vocab = data::ElementVocabulary(header.at("vocabulary").get<std::vector<std::string>>());
    ck.property = header.at("property").get<std::string>();
    ck.unit = header.at("unit").get<std::string>();
    ck.epoch = header.at("epoch").get<std::size_t>();
    ck.config.validate();
    pos += header_len;

    const auto& layout = header.at("tensors");
    if (!layout.is_array() || layout.size() != ModelParams::tensor_count + 1)
      throw ConfigError("checkpoint lists " + std::to_string(layout.size()) + " tensors, expected " +
                        std::to_string(ModelParams::tensor_count + 1));
    const auto count_rows = layout[1].at("rows").get<std::size_t>();
    const auto shapes = expected_shapes(ck.config, ck.vocab.size(), count_rows);
    const auto tensors = ck.params.tensors();
    for (std::size_t i = 0; i < ModelParams::tensor_count; ++i) {
      const auto& entry = layout[i];
      const auto name = entry.at("name").get<std::string>();
      const auto rows = entry.at("rows").get<ad::Index>();
      const auto cols = entry.at("cols").get<ad::Index>();
      if (name != ModelParams::names()[i] || rows != shapes[i].first || cols != shapes[i].second)
        throw ConfigError("checkpoint tensor " + std::to_string(i) + " is " + name + " " + ad::shape_string(rows, cols) +
                          ", expected " + std::string(ModelParams::names()[i]) + " " +
                          ad::shape_string(shapes[i].first, shapes[i].second));
      *tensors[i] = Tensor(get_matrix(body, pos, rows, cols), true);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint header: ") + e.what());
  }
  const double mean = std::bit_cast<double>(get_le<std::uint64_t>(body, pos));
  const double stddev = std::bit_cast<double>(get_le<std::uint64_t>(body, pos));
  if (pos != body.size()) throw ConfigError("checkpoint has trailing bytes");
  ck.normalizer = data::Normalizer(mean, stddev);
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write checkpoint: " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ConfigError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open checkpoint: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return deserialize_checkpoint(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace ggrnet::model
