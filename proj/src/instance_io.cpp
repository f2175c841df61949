#include "ghcm/instance_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "ghcm/errors.hpp"

namespace ghcm {

namespace {

constexpr std::array<char, 4> kMagic = {'G', 'H', 'C', 'M'};

template <typename T>
void put(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  auto bits = std::bit_cast<U>(value);
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>(bits & 0xffu);
    bits = static_cast<U>(bits >> 8);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw Error(ErrorCode::kFormat, "truncated binary instance");
  U bits = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) bits = static_cast<U>((bits << 8) | bytes[i]);
  return std::bit_cast<T>(bits);
}

std::vector<int> user_labels(const Instance& instance) {
  std::vector<int> out(instance.num_vertices());
  for (std::size_t u = 0; u < out.size(); ++u) {
    out[u] = instance.spec().labels[static_cast<std::size_t>(instance.truth()[u])];
  }
  return out;
}

std::vector<int> label_indices(const ModelSpec& spec, const std::vector<int>& labels) {
  std::vector<int> out(labels.size());
  for (std::size_t u = 0; u < labels.size(); ++u) {
    try {
      out[u] = spec.index_of(labels[u]);
    } catch (const Error&) {
      throw Error(ErrorCode::kFormat, "ground-truth label not in spec.labels");
    }
  }
  return out;
}

}  // namespace

nlohmann::json instance_to_json(const Instance& instance) {
  nlohmann::json positions = nlohmann::json::array();
  for (VertexId u = 0; u < instance.num_vertices(); ++u) positions.push_back(instance.vertex(u).position);
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& o : instance.observation_list()) pairs.push_back({o.u, o.v, o.y});
  return nlohmann::json{{"format", "ghcm-instance"},
                        {"version", kInstanceFormatVersion},
                        {"spec", instance.spec()},
                        {"seed", instance.seed()},
                        {"positions", std::move(positions)},
                        {"truth", user_labels(instance)},
                        {"observations", std::move(pairs)}};
}

Instance instance_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "ghcm-instance") {
      throw Error(ErrorCode::kFormat, "not a ghcm instance document");
    }
    if (j.at("version").get<int>() != kInstanceFormatVersion) {
      throw Error(ErrorCode::kFormat, "unsupported instance version");
    }
    const auto spec = j.at("spec").get<ModelSpec>();
    const auto seed = j.at("seed").get<std::uint64_t>();
    const auto& positions = j.at("positions");
    std::vector<std::vector<double>> coords(static_cast<std::size_t>(spec.d),
                                            std::vector<double>(positions.size()));
    for (std::size_t u = 0; u < positions.size(); ++u) {
      const auto p = positions[u].get<std::vector<double>>();
      if (p.size() != static_cast<std::size_t>(spec.d)) {
        throw Error(ErrorCode::kFormat, "position dimension mismatch");
      }
      for (int ax = 0; ax < spec.d; ++ax) coords[static_cast<std::size_t>(ax)][u] = p[static_cast<std::size_t>(ax)];
    }
    auto truth = label_indices(spec, j.at("truth").get<std::vector<int>>());
    std::vector<Observation> pairs;
    for (const auto& row : j.at("observations")) {
      pairs.push_back({row.at(0).get<VertexId>(), row.at(1).get<VertexId>(), row.at(2).get<double>()});
    }
    return Instance::from_parts(spec, seed, std::move(coords), std::move(truth), std::move(pairs));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("malformed instance JSON: ") + e.what());
  }
}

void write_instance_binary(const Instance& instance, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint16_t>(out, kInstanceFormatVersion);
  const std::string spec = nlohmann::json(instance.spec()).dump();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(spec.size()));
  out.write(spec.data(), static_cast<std::streamsize>(spec.size()));
  put<std::uint64_t>(out, instance.seed());
  const auto count = instance.num_vertices();
  put<std::uint64_t>(out, count);
  for (VertexId u = 0; u < count; ++u) {
    for (int ax = 0; ax < instance.dim(); ++ax) put<double>(out, instance.coord(u, ax));
  }
  for (int label : user_labels(instance)) put<std::int32_t>(out, label);
  put<std::uint64_t>(out, instance.num_observations());
  for (VertexId u = 0; u < count; ++u) {
    const auto nbrs = instance.neighbors(u);
    const auto vals = instance.values(u);
    for (std::size_t e = 0; e < nbrs.size(); ++e) {
      if (u < nbrs[e]) {
        put<std::uint32_t>(out, u);
        put<std::uint32_t>(out, nbrs[e]);
        put<double>(out, vals[e]);
      }
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing binary instance");
}

Instance read_instance_binary(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw Error(ErrorCode::kFormat, "bad magic, not a GHCM binary instance");
  if (get<std::uint16_t>(in) != kInstanceFormatVersion) {
    throw Error(ErrorCode::kFormat, "unsupported instance version");
  }
  const auto spec_len = get<std::uint32_t>(in);
  std::string spec_text(spec_len, '\0');
  in.read(spec_text.data(), spec_len);
  if (!in) throw Error(ErrorCode::kFormat, "truncated spec block");
  ModelSpec spec;
  try {
    spec = nlohmann::json::parse(spec_text).get<ModelSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("malformed embedded spec: ") + e.what());
  }
  const auto seed = get<std::uint64_t>(in);
  const auto count = get<std::uint64_t>(in);
  if (count > std::numeric_limits<VertexId>::max()) throw Error(ErrorCode::kFormat, "too many vertices");
  std::vector<std::vector<double>> coords(static_cast<std::size_t>(spec.d), std::vector<double>(count));
  for (std::size_t u = 0; u < count; ++u) {
    for (int ax = 0; ax < spec.d; ++ax) coords[static_cast<std::size_t>(ax)][u] = get<double>(in);
  }
  std::vector<int> labels(count);
  for (auto& l : labels) l = get<std::int32_t>(in);
  auto truth = label_indices(spec, labels);
  const auto num_pairs = get<std::uint64_t>(in);
  std::vector<Observation> pairs;
  pairs.reserve(num_pairs);
  for (std::uint64_t i = 0; i < num_pairs; ++i) {
    Observation o;
    o.u = get<std::uint32_t>(in);
    o.v = get<std::uint32_t>(in);
    o.y = get<double>(in);
    pairs.push_back(o);
  }
  return Instance::from_parts(std::move(spec), seed, std::move(coords), std::move(truth), std::move(pairs));
}

void save_instance(const Instance& instance, const std::string& path) {
  const bool as_json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  if (as_json) {
    out << instance_to_json(instance).dump() << '\n';
  } else {
    write_instance_binary(instance, out);
  }
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path + "'");
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::array<char, 4> head{};
  in.read(head.data(), head.size());
  const bool binary = in.gcount() == 4 && head == kMagic;
  in.clear();
  in.seekg(0);
  if (binary) return read_instance_binary(in);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, "'" + path + "' is neither a binary nor a JSON instance");
  }
  return instance_from_json(j);
}

}  // namespace ghcm
