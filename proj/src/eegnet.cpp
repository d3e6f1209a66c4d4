#include "aad/eegnet.hpp"

#include "aad/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace aad {

void EegNetConfig::validate() const {
  if (f1 < 1 || k1 < 1 || depth < 1 || channels < 1 || f2 < 1 || k2 < 1 ||
      pool1 < 1 || pool2 < 1 || samples < 1)
    throw nn::NnError("EegNetConfig: all dimensions must be positive");
  if (dropout_p < 0.0f || dropout_p >= 1.0f)
    throw nn::NnError("EegNetConfig: dropout probability out of range");
  if (samples / pool1 / pool2 < 1)
    throw nn::NnError("EegNetConfig: too few samples for two pooling stages");
}

int EegNetConfig::dense_inputs() const { return f2 * (samples / pool1 / pool2); }

EegNet::EegNet(EegNetConfig cfg)
    : conv1("conv1", cfg.f1, cfg.k1),
      bn1("bn1", cfg.f1),
      dwconv("dwconv", cfg.f1, cfg.depth, cfg.channels),
      bn2("bn2", cfg.f1 * cfg.depth),
      pool1(cfg.pool1),
      drop1(cfg.dropout_p),
      sep("sep", cfg.f1 * cfg.depth, cfg.f2, cfg.k2),
      bn3("bn3", cfg.f2),
      pool2(cfg.pool2),
      drop2(cfg.dropout_p),
      dense("dense", cfg.dense_inputs()),
      cfg_(cfg) {
  cfg.validate();
}

Eigen::VectorXf EegNet::forward(const nn::Tensor4& x, bool train) {
  if (x.f != 1 || x.h != cfg_.channels || x.w != cfg_.samples)
    throw nn::NnError("EegNet::forward: bad input shape");
  nn::Tensor4 t = conv1.forward(x, train);
  t = bn1.forward(t, train);
  t = dwconv.forward(t, train);
  t = bn2.forward(t, train);
  t = elu1.forward(t, train);
  t = pool1.forward(t, train);
  t = drop1.forward(t, train);
  t = sep.forward(t, train);
  t = bn3.forward(t, train);
  t = elu2.forward(t, train);
  t = pool2.forward(t, train);
  t = drop2.forward(t, train);
  return dense.forward(t);
}

void EegNet::backward(const Eigen::VectorXf& grad_logit) {
  nn::Tensor4 g = dense.backward(grad_logit);
  g = drop2.backward(g);
  g = pool2.backward(g);
  g = elu2.backward(g);
  g = bn3.backward(g);
  g = sep.backward(g);
  g = drop1.backward(g);
  g = pool1.backward(g);
  g = elu1.backward(g);
  g = bn2.backward(g);
  g = dwconv.backward(g);
  g = bn1.backward(g);
  conv1.backward(g);
}

std::vector<nn::ParamRef> EegNet::params() {
  std::vector<nn::ParamRef> out;
  for (auto* layer : std::initializer_list<nn::Layer*>{&conv1, &bn1, &dwconv, &bn2,
                                                       &sep, &bn3})
    for (auto& p : layer->params()) out.push_back(p);
  for (auto& p : dense.params()) out.push_back(p);
  return out;
}

std::vector<nn::BufferRef> EegNet::buffers() {
  std::vector<nn::BufferRef> out;
  for (auto* bn : {&bn1, &bn2, &bn3})
    for (auto& b : bn->buffers()) out.push_back(b);
  return out;
}

void EegNet::zero_grad() {
  for (auto& p : params()) p.grad->setZero();
}

void EegNet::apply_max_norm() {
  dwconv.max_norm(cfg_.max_norm_depthwise);
  dense.max_norm(cfg_.max_norm_dense);
}

void EegNet::set_dropout_stream(RngStream* rng) {
  drop1.set_stream(rng);
  drop2.set_stream(rng);
}

void EegNet::init_weights(RngStream& rng) {
  auto he_fill = [&rng](Eigen::ArrayXf& w, int fan_in) {
    auto std = static_cast<float>(std::sqrt(2.0 / fan_in));
    for (Eigen::Index i = 0; i < w.size(); ++i)
      w[i] = static_cast<float>(rng.normal()) * std;
  };
  he_fill(conv1.weight, cfg_.k1);
  he_fill(dwconv.weight, cfg_.channels);
  he_fill(sep.depthwise, cfg_.k2);
  he_fill(sep.pointwise, cfg_.f1 * cfg_.depth);
  // Dense stays at zero; batch norms start at gamma 1, beta 0.
}

std::int64_t EegNet::param_count(CountConvention conv) const {
  std::int64_t n = 0;
  auto& self = const_cast<EegNet&>(*this);
  for (auto& p : self.params()) n += p.value->size();
  if (conv == CountConvention::WithBuffers)
    for (auto& b : self.buffers()) n += b.value->size();
  return n;
}

ModelSnapshot snapshot(EegNet& model) {
  ModelSnapshot s;
  for (auto& p : model.params()) s.blobs.emplace_back(p.name, *p.value);
  for (auto& b : model.buffers()) s.blobs.emplace_back(b.name, *b.value);
  return s;
}

void restore(EegNet& model, const ModelSnapshot& snap) {
  auto find = [&snap](const std::string& name) -> const Eigen::ArrayXf& {
    for (auto& [n, v] : snap.blobs)
      if (n == name) return v;
    throw nn::NnError("restore: missing blob " + name);
  };
  for (auto& p : model.params()) *p.value = find(p.name);
  for (auto& b : model.buffers()) *b.value = find(b.name);
}

namespace {

const char kCkptMagic[4] = {'E', 'A', 'C', 'K'};
constexpr std::uint32_t kCkptVersion = 1;

void write_blob(std::ostream& os, const Eigen::ArrayXf& a) {
  os.write(reinterpret_cast<const char*>(a.data()),
           static_cast<std::streamsize>(sizeof(float)) * a.size());
}

void read_blob(std::istream& is, Eigen::ArrayXf& a) {
  is.read(reinterpret_cast<char*>(a.data()),
          static_cast<std::streamsize>(sizeof(float)) * a.size());
  if (!is) throw TruncatedError("checkpoint: truncated blob");
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dest, EegNet& model,
                     const nn::Adam* opt) {
  std::ofstream os(dest, std::ios::binary);
  if (!os) throw IoError("checkpoint: cannot open " + dest.string());

  std::ostringstream h;
  const EegNetConfig& c = model.config();
  h << "f1=" << c.f1 << " k1=" << c.k1 << " depth=" << c.depth
    << " channels=" << c.channels << " f2=" << c.f2 << " k2=" << c.k2
    << " pool1=" << c.pool1 << " pool2=" << c.pool2 << " samples=" << c.samples
    << "\n";
  for (auto& p : model.params()) h << "param=" << p.name << "," << p.value->size() << "\n";
  for (auto& b : model.buffers())
    h << "buffer=" << b.name << "," << b.value->size() << "\n";
  h << "adam_t=" << (opt ? opt->t() : -1) << "\n";
  std::string header = h.str();

  os.write(kCkptMagic, 4);
  os.write(reinterpret_cast<const char*>(&kCkptVersion), 4);
  auto hlen = static_cast<std::uint64_t>(header.size());
  os.write(reinterpret_cast<const char*>(&hlen), 8);
  os.write(header.data(), static_cast<std::streamsize>(header.size()));

  for (auto& p : model.params()) write_blob(os, *p.value);
  for (auto& b : model.buffers()) write_blob(os, *b.value);
  if (opt) {
    auto* o = const_cast<nn::Adam*>(opt);
    for (auto& m : o->moments1()) write_blob(os, m);
    for (auto& v : o->moments2()) write_blob(os, v);
  }
  if (!os) throw IoError("checkpoint: write failed");
}

void load_checkpoint(const std::filesystem::path& source, EegNet& model, nn::Adam* opt) {
  std::ifstream is(source, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open " + source.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kCkptMagic, 4) != 0)
    throw BadMagicError("checkpoint: bad magic");
  std::uint32_t version;
  is.read(reinterpret_cast<char*>(&version), 4);
  if (!is || version != kCkptVersion) throw VersionError("checkpoint: bad version");
  std::uint64_t hlen;
  is.read(reinterpret_cast<char*>(&hlen), 8);
  std::string header(hlen, '\0');
  is.read(header.data(), static_cast<std::streamsize>(hlen));
  if (!is) throw TruncatedError("checkpoint: truncated header");

  std::int64_t adam_t = -1;
  std::istringstream hs(header);
  for (std::string line; std::getline(hs, line);)
    if (line.rfind("adam_t=", 0) == 0) adam_t = std::stoll(line.substr(7));

  for (auto& p : model.params()) read_blob(is, *p.value);
  for (auto& b : model.buffers()) read_blob(is, *b.value);
  if (opt && adam_t >= 0) {
    for (auto& m : opt->moments1()) read_blob(is, m);
    for (auto& v : opt->moments2()) read_blob(is, v);
    opt->set_t(adam_t);
  }
}

}  // namespace aad
