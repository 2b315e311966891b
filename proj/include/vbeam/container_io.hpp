// Copyright 2026 The vbeam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VBEAM_CONTAINER_IO_HPP
#define VBEAM_CONTAINER_IO_HPP

// VBEAMv01 container: 8-byte magic "VBEAMv01", a little-endian uint64 length
// prefix, a UTF-8 JSON header (generation spec + array manifest with name,
// rows, cols and payload byte offset), then the raw arrays as little-endian
// 64-bit floats, row-major, in manifest order. Model files use the .vbm
// extension, utterance sets .vbu.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vbeam/matrix.hpp"
#include "vbeam/synth_model.hpp"

namespace vbeam {

static_assert(std::endian::native == std::endian::little,
              "VBEAMv01 containers are little-endian");

inline constexpr char kContainerMagic[8] = {'V', 'B', 'E', 'A',
                                            'M', 'v', '0', '1'};

/// Malformed or truncated container; carries the byte offset of the fault.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& msg, std::uint64_t offset)
      : std::runtime_error(msg + " (byte offset " + std::to_string(offset) +
                           ")"),
        offset_(offset) {}
  std::uint64_t byte_offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

namespace io_detail {

struct ArrayRef {
  std::string name;
  std::uint64_t rows;
  std::uint64_t cols;
  const double* data;
};

inline std::vector<std::uint8_t> pack(const nlohmann::json& spec_json,
                                      const std::string& kind,
                                      const std::vector<ArrayRef>& arrays) {
  nlohmann::json manifest = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const ArrayRef& a : arrays) {
    manifest.push_back({{"name", a.name},
                        {"rows", a.rows},
                        {"cols", a.cols},
                        {"offset", offset}});
    offset += a.rows * a.cols * sizeof(double);
  }
  nlohmann::json header = {
      {"kind", kind}, {"spec", spec_json}, {"arrays", manifest}};
  const std::string htext = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(8 + 8 + htext.size() + offset);
  out.insert(out.end(), kContainerMagic, kContainerMagic + 8);
  const std::uint64_t hlen = htext.size();
  const auto* hp = reinterpret_cast<const std::uint8_t*>(&hlen);
  out.insert(out.end(), hp, hp + 8);
  out.insert(out.end(), htext.begin(), htext.end());
  for (const ArrayRef& a : arrays) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(a.data);
    out.insert(out.end(), p, p + a.rows * a.cols * sizeof(double));
  }
  return out;
}

class Unpacker {
 public:
  explicit Unpacker(std::vector<std::uint8_t> bytes)
      : bytes_(std::move(bytes)) {
    if (bytes_.size() < 8 ||
        std::memcmp(bytes_.data(), kContainerMagic, 8) != 0) {
      throw FormatError("bad magic, not a VBEAMv01 container", 0);
    }
    if (bytes_.size() < 16) {
      throw FormatError("truncated header length", 8);
    }
    std::uint64_t hlen;
    std::memcpy(&hlen, bytes_.data() + 8, 8);
    if (16 + hlen > bytes_.size()) {
      throw FormatError("truncated JSON header", 16);
    }
    try {
      header_ = nlohmann::json::parse(bytes_.begin() + 16,
                                      bytes_.begin() + 16 + hlen);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("unparseable JSON header: ") + e.what(),
                        16);
    }
    payload_start_ = 16 + hlen;
  }

  const nlohmann::json& header() const { return header_; }

  std::string kind() const {
    if (!header_.contains("kind") || !header_["kind"].is_string()) {
      throw FormatError("header missing 'kind'", 16);
    }
    return header_["kind"].get<std::string>();
  }

  /// Reads manifest entry `i`, checking offsets against the payload size.
  ScoreMatrix array(std::size_t i) const {
    const auto& manifest = header_.at("arrays");
    if (i >= manifest.size()) {
      throw FormatError("array index beyond manifest", payload_start_);
    }
    const auto& entry = manifest.at(i);
    const std::uint64_t rows = entry.at("rows").get<std::uint64_t>();
    const std::uint64_t cols = entry.at("cols").get<std::uint64_t>();
    const std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
    const std::uint64_t nbytes = rows * cols * sizeof(double);
    const std::uint64_t start = payload_start_ + offset;
    if (start + nbytes > bytes_.size()) {
      throw FormatError("truncated payload for array '" +
                            entry.at("name").get<std::string>() + "'",
                        start);
    }
    std::vector<double> values(rows * cols);
    std::memcpy(values.data(), bytes_.data() + start, nbytes);
    return ScoreMatrix::from_values(rows, cols, std::move(values));
  }

  std::size_t array_count() const { return header_.at("arrays").size(); }

  std::uint64_t payload_start() const { return payload_start_; }

 private:
  std::vector<std::uint8_t> bytes_;
  nlohmann::json header_;
  std::uint64_t payload_start_ = 0;
};

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path);
  }
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path,
                       const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open file for writing: " + path);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw std::runtime_error("write failed: " + path);
  }
}

}  // namespace io_detail

// ---------------------------------------------------------------------------
// Model containers (.vbm)

inline std::vector<std::uint8_t> serialize_model(const SyntheticModel& m) {
  nlohmann::json spec = {{"seed", m.spec.seed},     {"d_feat", m.spec.d_feat},
                         {"d_enc", m.spec.d_enc},   {"d_dec", m.spec.d_dec},
                         {"d_lm", m.spec.d_lm},     {"vocab_size", m.spec.vocab_size}};
  std::vector<io_detail::ArrayRef> arrays = {
      {"enc_w", m.enc_w.rows(), m.enc_w.cols(), m.enc_w.data()},
      {"enc_b", 1, m.enc_b.size(), m.enc_b.data()},
      {"ctc_w", m.ctc_w.rows(), m.ctc_w.cols(), m.ctc_w.data()},
      {"ctc_b", 1, m.ctc_b.size(), m.ctc_b.data()},
      {"dec_emb", m.dec_emb.rows(), m.dec_emb.cols(), m.dec_emb.data()},
      {"dec_rr", m.dec_rr.rows(), m.dec_rr.cols(), m.dec_rr.data()},
      {"dec_rc", m.dec_rc.rows(), m.dec_rc.cols(), m.dec_rc.data()},
      {"dec_rb", 1, m.dec_rb.size(), m.dec_rb.data()},
      {"att_proj", m.att_proj.rows(), m.att_proj.cols(), m.att_proj.data()},
      {"gen_w", m.gen_w.rows(), m.gen_w.cols(), m.gen_w.data()},
      {"gen_b", 1, m.gen_b.size(), m.gen_b.data()},
      {"lm_emb", m.lm_emb.rows(), m.lm_emb.cols(), m.lm_emb.data()},
      {"lm_hh", m.lm_hh.rows(), m.lm_hh.cols(), m.lm_hh.data()},
      {"lm_hb", 1, m.lm_hb.size(), m.lm_hb.data()},
      {"lm_out", m.lm_out.rows(), m.lm_out.cols(), m.lm_out.data()},
      {"lm_ob", 1, m.lm_ob.size(), m.lm_ob.data()},
  };
  return io_detail::pack(spec, "model", arrays);
}

inline SyntheticModel deserialize_model(std::vector<std::uint8_t> bytes) {
  io_detail::Unpacker u(std::move(bytes));
  if (u.kind() != "model") {
    throw FormatError("expected a model container, got '" + u.kind() + "'",
                      16);
  }
  const auto& spec_json = u.header().at("spec");
  SyntheticModelSpec spec;
  spec.seed = spec_json.at("seed").get<std::uint64_t>();
  spec.d_feat = spec_json.at("d_feat").get<std::int32_t>();
  spec.d_enc = spec_json.at("d_enc").get<std::int32_t>();
  spec.d_dec = spec_json.at("d_dec").get<std::int32_t>();
  spec.d_lm = spec_json.at("d_lm").get<std::int32_t>();
  spec.vocab_size = spec_json.at("vocab_size").get<std::int32_t>();
  spec.validate();

  if (u.array_count() != 16) {
    throw FormatError("model manifest must list 16 arrays", 16);
  }
  SyntheticModel m;
  m.spec = spec;
  m.vocab = Vocabulary(spec.vocab_size);

  auto expect = [&](std::size_t i, std::size_t rows, std::size_t cols) {
    ScoreMatrix a = u.array(i);
    if (a.rows() != rows || a.cols() != cols) {
      throw FormatError("dimension mismatch for array " + std::to_string(i) +
                            ": got " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + ", expected " +
                            std::to_string(rows) + "x" + std::to_string(cols),
                        u.payload_start());
    }
    return a;
  };
  auto expect_vec = [&](std::size_t i, std::size_t n) {
    ScoreMatrix a = expect(i, 1, n);
    return a.take_values();
  };

  const std::size_t L = spec.vocab_size, de = spec.d_enc, dd = spec.d_dec,
                    dl = spec.d_lm, df = spec.d_feat;
  m.enc_w = expect(0, de, df);
  m.enc_b = expect_vec(1, de);
  m.ctc_w = expect(2, L + 1, de);
  m.ctc_b = expect_vec(3, L + 1);
  m.dec_emb = expect(4, L, dd);
  m.dec_rr = expect(5, dd, dd);
  m.dec_rc = expect(6, dd, de);
  m.dec_rb = expect_vec(7, dd);
  m.att_proj = expect(8, de, dd);
  m.gen_w = expect(9, L, dd + de);
  m.gen_b = expect_vec(10, L);
  m.lm_emb = expect(11, L, dl);
  m.lm_hh = expect(12, dl, dl);
  m.lm_hb = expect_vec(13, dl);
  m.lm_out = expect(14, L, dl);
  m.lm_ob = expect_vec(15, L);
  return m;
}

inline void save_model(const SyntheticModel& m, const std::string& path) {
  io_detail::write_file(path, serialize_model(m));
}

inline SyntheticModel load_model(const std::string& path) {
  return deserialize_model(io_detail::read_file(path));
}

// ---------------------------------------------------------------------------
// Utterance-set containers (.vbu)

inline std::vector<std::uint8_t> serialize_utterances(const UtteranceSet& s) {
  nlohmann::json spec = {{"seed", s.spec.seed},
                         {"count", s.spec.count},
                         {"t_min", s.spec.t_min},
                         {"t_max", s.spec.t_max},
                         {"d_feat", s.spec.d_feat}};
  std::vector<io_detail::ArrayRef> arrays;
  arrays.reserve(s.features.size());
  for (std::size_t i = 0; i < s.features.size(); ++i) {
    arrays.push_back({"utt_" + std::to_string(i), s.features[i].rows(),
                      s.features[i].cols(), s.features[i].data()});
  }
  return io_detail::pack(spec, "utterances", arrays);
}

inline UtteranceSet deserialize_utterances(std::vector<std::uint8_t> bytes) {
  io_detail::Unpacker u(std::move(bytes));
  if (u.kind() != "utterances") {
    throw FormatError("expected an utterance container, got '" + u.kind() +
                          "'",
                      16);
  }
  const auto& spec_json = u.header().at("spec");
  UtteranceSet s;
  s.spec.seed = spec_json.at("seed").get<std::uint64_t>();
  s.spec.count = spec_json.at("count").get<std::int32_t>();
  s.spec.t_min = spec_json.at("t_min").get<std::int32_t>();
  s.spec.t_max = spec_json.at("t_max").get<std::int32_t>();
  s.spec.d_feat = spec_json.at("d_feat").get<std::int32_t>();
  s.spec.validate();

  if (u.array_count() != static_cast<std::size_t>(s.spec.count)) {
    throw FormatError("utterance manifest count does not match spec", 16);
  }
  for (std::size_t i = 0; i < u.array_count(); ++i) {
    ScoreMatrix f = u.array(i);
    if (f.cols() != static_cast<std::size_t>(s.spec.d_feat) ||
        f.rows() < static_cast<std::size_t>(s.spec.t_min) ||
        f.rows() > static_cast<std::size_t>(s.spec.t_max)) {
      throw FormatError("dimension mismatch for utterance " +
                            std::to_string(i),
                        u.payload_start());
    }
    s.features.push_back(std::move(f));
  }
  return s;
}

inline void save_utterances(const UtteranceSet& s, const std::string& path) {
  io_detail::write_file(path, serialize_utterances(s));
}

inline UtteranceSet load_utterances(const std::string& path) {
  return deserialize_utterances(io_detail::read_file(path));
}

}  // namespace vbeam

#endif  // VBEAM_CONTAINER_IO_HPP
