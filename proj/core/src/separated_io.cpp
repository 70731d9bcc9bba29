#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "pgdschwarz/separated_tensor.hpp"

namespace pgdschwarz {

namespace {

constexpr char kMagic[8] = {'P', 'G', 'D', 'S', 'E', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr char kAxesMagic[8] = {'P', 'G', 'D', 'A', 'X', 'E', 'S', '\0'};

template <typename T>
void put(std::ostream& out, T value) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw std::runtime_error("truncated separated-tensor container");
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

void put_vec(std::ostream& out, const Vec& v) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  } else {
    for (Eigen::Index i = 0; i < v.size(); ++i) put<double>(out, v(i));
  }
}

Vec get_vec(std::istream& in, std::size_t n) {
  Vec v(static_cast<Eigen::Index>(n));
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw std::runtime_error("truncated separated-tensor container");
  } else {
    for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = get<double>(in);
  }
  return v;
}

}  // namespace

void write_separated(std::ostream& out, const SeparatedVector& v) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, v.spatial_size());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(v.num_axes()));
  for (const auto& a : v.axes()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a->name().size()));
    out.write(a->name().data(), static_cast<std::streamsize>(a->name().size()));
    put<std::uint64_t>(out, a->size());
    put<double>(out, a->lo());
    put<double>(out, a->hi());
  }
  put<std::uint64_t>(out, v.num_terms());
  for (const auto& t : v.terms()) {
    put_vec(out, t.spatial);
    for (const auto& m : t.modes) put_vec(out, m);
  }
  if (!out) throw std::runtime_error("failed writing separated-tensor container");
}

SeparatedVector read_separated(std::istream& in, const AxisResolver& resolve) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a separated-tensor container");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw std::runtime_error("unsupported container version " + std::to_string(version));
  const auto spatial = get<std::uint64_t>(in);
  const auto naxes = get<std::uint32_t>(in);
  std::vector<AxisPtr> axes;
  for (std::uint32_t k = 0; k < naxes; ++k) {
    const auto len = get<std::uint32_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto n = get<std::uint64_t>(in);
    const double lo = get<double>(in);
    const double hi = get<double>(in);
    AxisPtr a = resolve(name, n, lo, hi);
    if (!a || a->size() != n || a->name() != name)
      throw std::runtime_error("axis '" + name + "' does not match the container header");
    axes.push_back(std::move(a));
  }
  SeparatedVector v(spatial, axes);
  const auto nterms = get<std::uint64_t>(in);
  v.reserve(nterms);
  for (std::uint64_t m = 0; m < nterms; ++m) {
    SeparatedTerm t;
    t.spatial = get_vec(in, spatial);
    for (const auto& a : axes) t.modes.push_back(get_vec(in, a->size()));
    v.push_back(std::move(t));
  }
  return v;
}

void save_separated(const std::string& path, const SeparatedVector& v) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_separated(out, v);
}

SeparatedVector load_separated(const std::string& path, const AxisResolver& resolve) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_separated(in, resolve);
}

void save_axes(const std::string& path, const std::vector<AxisPtr>& axes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.write(kAxesMagic, sizeof(kAxesMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(axes.size()));
  for (const auto& a : axes) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a->name().size()));
    out.write(a->name().data(), static_cast<std::streamsize>(a->name().size()));
    put<std::uint64_t>(out, a->size());
    put_vec(out, Eigen::Map<const Vec>(a->nodes().data(), static_cast<Eigen::Index>(a->size())));
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<AxisPtr> load_axes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kAxesMagic, sizeof(kAxesMagic)) != 0)
    throw std::runtime_error(path + ": not an axis container");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw std::runtime_error("unsupported container version " + std::to_string(version));
  const auto count = get<std::uint32_t>(in);
  std::vector<AxisPtr> axes;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto len = get<std::uint32_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto n = get<std::uint64_t>(in);
    Vec nodes = get_vec(in, n);
    axes.push_back(make_axis_ptr(ParamAxis(name, std::vector<double>(nodes.data(), nodes.data() + nodes.size()))));
  }
  return axes;
}

}  // namespace pgdschwarz
