#pragma once

// Model-level oracles composed from the plain-loop references.

#include "esefn/attention.hpp"
#include "esefn/fusion.hpp"
#include "reference.hpp"

namespace ref {

inline Vec linear(const Vec& x, const esefn::Linear& l) {
  return fc(x, values(l.weight), values(l.bias));
}

inline Vec excite(const Vec& pooled, const esefn::Linear& a, const esefn::Linear& b) {
  return sigmoid(linear(relu(linear(pooled, a)), b));
}

inline Map conv(const Map& x, const esefn::Conv1d& c) {
  return conv1d(x, values(c.weight), values(c.bias), c.weight.shape()[0], c.kernel(), c.stride,
                c.padding);
}

struct Gated {
  Map output;
  Vec gates;
};

inline Gated se(const esefn::SeBlock& block, const Map& x) {
  const Vec g = excite(pool(x), block.fc_reduce, block.fc_expand);
  return {scale_rows(x, g), g};
}

inline Gated mnet(const esefn::MNet& net, const Map& f) {
  const Map e = conv(conv(conv(f, net.conv3), net.conv2), net.conv1);
  const Vec g = excite(pool(e), net.fc4, net.fc3);
  return {scale_rows(f, g), g};
}

inline Gated cnet(const esefn::CNet& net, const Map& h) {
  const auto& c = net.conv4;
  const Map e = conv1d_transposed(h, values(c.weight), values(c.bias), c.weight.shape()[1],
                                  c.kernel(), c.stride, c.padding);
  const Vec g = excite(pool(e), net.fc6, net.fc5);
  return {scale_rows(h, g), g};
}

inline Vec mlp(const Vec& x, const esefn::Mlp& m) { return linear(relu(linear(x, m.fc1)), m.fc2); }

// f_rs for a modal-sum or concat model.
inline Vec fused(const esefn::EseFnParams& p, const Vec& f_r, const Vec& f_s) {
  const Vec pr = mlp(f_r, p.proj_r), ps = mlp(f_s, p.proj_s);
  if (p.config().readout == esefn::Readout::kConcat) {
    Vec out = pr;
    out.insert(out.end(), ps.begin(), ps.end());
    return out;
  }
  const std::size_t d = pr.size();
  Map h{d, 2, Vec(2 * d)};
  for (std::size_t i = 0; i < d; ++i) {
    h.data[2 * i] = pr[i];
    h.data[2 * i + 1] = ps[i];
  }
  if (p.mnet) h = transpose(mnet(*p.mnet, transpose(h)).output);
  if (p.modal_se) h = transpose(se(*p.modal_se, transpose(h)).output);
  if (p.cnet) h = cnet(*p.cnet, h).output;
  if (p.channel_se) h = se(*p.channel_se, h).output;
  Vec out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = h.at(i, 0) + h.at(i, 1);
  return out;
}

}  // namespace ref
