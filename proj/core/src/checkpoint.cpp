#include "nftproj/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "nftproj/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace nftproj {

namespace {

constexpr char kMagic[4] = {'N', 'F', 'T', 'P'};
constexpr std::uint32_t kVersion = 1;

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct Writer {
  std::string& out;

  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const std::string& s) {
    u64(s.size());
    out.append(s);
  }
  void raw(const void* p, std::size_t n) {
    out.append(reinterpret_cast<const char*>(p), n);
  }
};

struct Reader {
  const char* p;
  const char* end;
  const char* what;

  void need(std::size_t n) {
    if (std::size_t(end - p) < n) {
      raise(Errc::corrupt_checkpoint, std::string(what) + ": section truncated");
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    p += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, p, 8);
    p += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes() {
    std::uint64_t n = u64();
    need(n);
    std::string s(p, p + n);
    p += n;
    return s;
  }
  bool done() const { return p == end; }
};

std::string encode_pca(const PcaModel& pca) {
  std::string s;
  Writer w{s};
  w.u64(pca.mean.size());
  w.u64(kContextDim);
  for (double v : pca.mean) w.f64(v);
  for (double v : pca.components.a) w.f64(v);
  for (double v : pca.explained_variance) w.f64(v);
  return s;
}

PcaModel decode_pca(Reader& r) {
  PcaModel pca;
  std::uint64_t dim = r.u64();
  std::uint64_t ncomp = r.u64();
  if (dim != kTokenVectorDim || ncomp != kContextDim) {
    raise(Errc::corrupt_checkpoint, "pca: unexpected dimensions");
  }
  pca.mean.resize(dim);
  for (double& v : pca.mean) v = r.f64();
  pca.components = Mat(kContextDim, dim);
  for (double& v : pca.components.a) v = r.f64();
  for (double& v : pca.explained_variance) v = r.f64();
  if (!r.done()) raise(Errc::corrupt_checkpoint, "pca: trailing bytes");
  return pca;
}

std::string encode_norm(const NormalizationParams& n) {
  std::string s;
  Writer w{s};
  w.f64(n.abs_min_offset);
  w.f64(n.global_min);
  w.f64(n.global_max);
  w.f64(n.a);
  w.f64(n.b);
  return s;
}

NormalizationParams decode_norm(Reader& r) {
  NormalizationParams n;
  n.abs_min_offset = r.f64();
  n.global_min = r.f64();
  n.global_max = r.f64();
  n.a = r.f64();
  n.b = r.f64();
  if (!r.done()) raise(Errc::corrupt_checkpoint, "norm: trailing bytes");
  return n;
}

std::string encode_contexts(const ContextTable& table) {
  std::string s;
  Writer w{s};
  w.u64(table.size());
  for (const auto& [id, cv] : table) {
    w.bytes(id);
    for (double v : cv.values) w.f64(v);
  }
  return s;
}

ContextTable decode_contexts(Reader& r) {
  ContextTable table;
  std::uint64_t n = r.u64();
  for (std::uint64_t k = 0; k < n; ++k) {
    std::string id = r.bytes();
    ContextVector cv;
    for (double& v : cv.values) v = r.f64();
    if (!table.emplace(std::move(id), cv).second) {
      raise(Errc::corrupt_checkpoint, "contexts: duplicate collection id");
    }
  }
  if (!r.done()) raise(Errc::corrupt_checkpoint, "contexts: trailing bytes");
  return table;
}

std::string encode_model(const ModelParams& m) {
  std::string s;
  Writer w{s};
  w.u64(m.hidden);
  w.f64(m.dropout_rate);
  for_each_tensor(m, [&](const Tensor& t) {
    w.u64(t.numel());
    for (std::size_t i = 0; i < t.numel(); ++i) w.f64(t.data()[i]);
  });
  return s;
}

ModelParams decode_model(Reader& r) {
  std::uint64_t hidden = r.u64();
  double dropout = r.f64();
  if (hidden == 0 || hidden > (1u << 20) || !(dropout >= 0.0 && dropout < 1.0)) {
    raise(Errc::corrupt_checkpoint, "model: implausible header");
  }
  ModelParams m = ModelParams::zeros(hidden, dropout);
  for_each_tensor(m, [&](Tensor& t) {
    if (r.u64() != t.numel()) {
      raise(Errc::corrupt_checkpoint, "model: tensor size mismatch");
    }
    for (std::size_t i = 0; i < t.numel(); ++i) t.data()[i] = r.f64();
  });
  if (!r.done()) raise(Errc::corrupt_checkpoint, "model: trailing bytes");
  return m;
}

std::string encode_config(const TrainConfig& c) {
  std::string s;
  Writer w{s};
  w.u64(c.epochs);
  w.u64(c.batch_size);
  w.u64(c.window);
  w.u64(c.hidden);
  w.f64(c.dropout_rate);
  w.f64(c.lr);
  w.f64(c.beta1);
  w.f64(c.beta2);
  w.f64(c.eps);
  w.u64(c.seed);
  w.u64(c.window_stride);
  w.u64(c.threads);
  return s;
}

TrainConfig decode_config(Reader& r) {
  TrainConfig c;
  c.epochs = r.u64();
  c.batch_size = r.u64();
  c.window = r.u64();
  c.hidden = r.u64();
  c.dropout_rate = r.f64();
  c.lr = r.f64();
  c.beta1 = r.f64();
  c.beta2 = r.f64();
  c.eps = r.f64();
  c.seed = r.u64();
  c.window_stride = r.u64();
  c.threads = r.u64();
  if (!r.done()) raise(Errc::corrupt_checkpoint, "config: trailing bytes");
  return c;
}

}  // namespace

void save_checkpoint(const Checkpoint& cp, const std::string& path) {
  std::string out;
  Writer w{out};
  w.raw(kMagic, 4);
  w.u32(kVersion);
  w.bytes(cp.pca ? encode_pca(*cp.pca) : std::string());
  w.bytes(cp.norm ? encode_norm(*cp.norm) : std::string());
  w.bytes(cp.contexts.empty() ? std::string() : encode_contexts(cp.contexts));
  w.bytes(cp.model ? encode_model(*cp.model) : std::string());
  w.bytes(cp.config ? encode_config(*cp.config) : std::string());
  w.u64(fnv1a(out));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) raise(Errc::io_error, "cannot open for writing: " + path);
  f.write(out.data(), std::streamsize(out.size()));
  if (!f) raise(Errc::io_error, "write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) raise(Errc::io_error, "cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (!f.good() && !f.eof()) raise(Errc::io_error, "read failed: " + path);

  if (bytes.size() < 4 + 4 + 8) raise(Errc::corrupt_checkpoint, "file too short");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    raise(Errc::corrupt_checkpoint, "bad magic bytes");
  }

  std::string body = bytes.substr(0, bytes.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
  if (fnv1a(body) != stored) raise(Errc::corrupt_checkpoint, "checksum mismatch");

  Reader r{body.data() + 4, body.data() + body.size(), path.c_str()};
  std::uint32_t version = r.u32();
  if (version != kVersion) {
    raise(Errc::corrupt_checkpoint,
          "unsupported format version " + std::to_string(version) + " (supported: " +
              std::to_string(kVersion) + ")");
  }

  std::string sections[5];
  for (auto& s : sections) s = r.bytes();
  if (!r.done()) raise(Errc::corrupt_checkpoint, "trailing bytes after sections");

  Checkpoint cp;
  auto section_reader = [&](const std::string& s, const char* what) {
    return Reader{s.data(), s.data() + s.size(), what};
  };
  if (!sections[0].empty()) {
    Reader sr = section_reader(sections[0], "pca");
    cp.pca = decode_pca(sr);
  }
  if (!sections[1].empty()) {
    Reader sr = section_reader(sections[1], "norm");
    cp.norm = decode_norm(sr);
  }
  if (!sections[2].empty()) {
    Reader sr = section_reader(sections[2], "contexts");
    cp.contexts = decode_contexts(sr);
  }
  if (!sections[3].empty()) {
    Reader sr = section_reader(sections[3], "model");
    cp.model = decode_model(sr);
  }
  if (!sections[4].empty()) {
    Reader sr = section_reader(sections[4], "config");
    cp.config = decode_config(sr);
  }
  return cp;
}

}  // namespace nftproj
