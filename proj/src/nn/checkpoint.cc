#include "spad/nn/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spad/base/error.h"

namespace spad::nn {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void PutU32(std::string &out, uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view Take(size_t n) {
    if (bytes_.size() - pos_ < n) throw FormatError("truncated checkpoint");
    std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  uint32_t U32() {
    uint32_t v;
    std::memcpy(&v, Take(4).data(), 4);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  size_t pos_ = 0;
};

}  // namespace

const Tensor &Checkpoint::Find(const std::string &name) const {
  for (const auto &[n, t] : tensors) {
    if (n == name) return t;
  }
  throw FormatError("checkpoint has no tensor " + name);
}

std::string SerializeCheckpoint(const Checkpoint &ck) {
  std::string out(kCheckpointMagic);
  PutU32(out, kCheckpointVersion);
  const nlohmann::json header = {
      {"kind", ck.kind}, {"flavor", ck.flavor}, {"meta", ck.meta}};
  const std::string text = header.dump();
  PutU32(out, static_cast<uint32_t>(text.size()));
  out += text;
  PutU32(out, static_cast<uint32_t>(ck.tensors.size()));
  for (const auto &[name, t] : ck.tensors) {
    PutU32(out, static_cast<uint32_t>(name.size()));
    out += name;
    const std::vector<int> shape = t.shape();
    PutU32(out, static_cast<uint32_t>(shape.size()));
    for (int d : shape) PutU32(out, static_cast<uint32_t>(d));
    for (double v : t.data()) {
      const float f = static_cast<float>(v);
      char buf[4];
      std::memcpy(buf, &f, 4);
      out.append(buf, 4);
    }
  }
  return out;
}

Checkpoint ParseCheckpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.Take(5) != kCheckpointMagic) throw FormatError("not a SPAD1 checkpoint");
  const uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  try {
    const nlohmann::json header = nlohmann::json::parse(r.Take(r.U32()));
    ck.kind = header.at("kind").get<std::string>();
    ck.flavor = header.at("flavor").get<std::string>();
    ck.meta = header.at("meta");
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("bad checkpoint header: ") + e.what());
  }
  const uint32_t count = r.U32();
  for (uint32_t i = 0; i < count; ++i) {
    std::string name(r.Take(r.U32()));
    const uint32_t rank = r.U32();
    if (rank > 2) throw FormatError("tensor " + name + " has rank > 2");
    std::vector<int> shape;
    size_t numel = 1;
    for (uint32_t k = 0; k < rank; ++k) {
      shape.push_back(static_cast<int>(r.U32()));
      numel *= shape.back();
    }
    std::string_view payload = r.Take(numel * 4);
    std::vector<double> data(numel);
    for (size_t k = 0; k < numel; ++k) {
      float f;
      std::memcpy(&f, payload.data() + 4 * k, 4);
      data[k] = f;
    }
    ck.tensors.emplace_back(std::move(name), Tensor(shape, std::move(data)));
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint");
  return ck;
}

void SaveCheckpoint(const std::string &path, const Checkpoint &ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  const std::string bytes = SerializeCheckpoint(ck);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

Checkpoint LoadCheckpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseCheckpoint(buf.str());
}

void AppendParams(const ParamStore &store, Checkpoint &ck) {
  for (const Parameter *p : store.All()) ck.tensors.emplace_back(p->name, p->value);
}

ParamStore ParamsFromCheckpoint(const Checkpoint &ck) {
  ParamStore store;
  for (const auto &[name, t] : ck.tensors) store.Add(name, t);
  return store;
}

void ExpectKind(const Checkpoint &ck, std::string_view kind) {
  if (ck.kind != kind) {
    throw ConfigError("expected a " + std::string(kind) + " checkpoint, got " +
                      ck.kind);
  }
}

}  // namespace spad::nn
