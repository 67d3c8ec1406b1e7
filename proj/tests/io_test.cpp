// Copyright 2026 The splin Authors.
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

#include <splin/csv.hpp>
#include <splin/sae.hpp>
#include <splin/splb.hpp>
#include <splin/synthdgp.hpp>

#include <gtest/gtest.h>

#include <cstring>
#include <limits>

#include "test_util.hpp"

namespace splin {
namespace {

// Hand-assembled little-endian bytes for a single 1x2 section.
std::string tiny_splb() {
  std::string s = "SPLB";
  s += std::string("\x01\x00\x00\x00", 4);          // version 1, reserved
  s += std::string("\x01\x00\x00\x00", 4);          // one section
  s += "DICT";
  s += std::string("\x01\x00\x00\x00\x00\x00\x00\x00", 8);
  s += std::string("\x02\x00\x00\x00\x00\x00\x00\x00", 8);
  s += std::string("\x00\x00\x00\x00\x00\x00\xf0\x3f", 8);  // 1.0
  s += std::string("\x00\x00\x00\x00\x00\x00\x00\xc0", 8);  // -2.0
  return s;
}

TEST(Splb, EncodesKnownBytes) {
  Matrix m(1, 2);
  m << 1.0, -2.0;
  EXPECT_EQ(encode_splb({{{"DICT", m, {}}}}), tiny_splb());
  const SplbFile f = decode_splb(tiny_splb());
  ASSERT_EQ(f.sections.size(), 1u);
  EXPECT_EQ(f.matrix("DICT"), m);
}

TEST(Splb, RoundTripsBitExactly) {
  const Dictionary d = sample_dictionary(7, 11, DictKind::kGaussianNormalized, 5);
  const SplbFile back = decode_splb(encode_splb(dictionary_splb(d)));
  const Matrix& a = back.matrix("DICT");
  ASSERT_EQ(a.rows(), 7);
  ASSERT_EQ(a.cols(), 11);
  EXPECT_EQ(std::memcmp(a.data(), d.atoms().data(), sizeof(double) * 77), 0);
  // Loading renormalizes, which may move the last bit.
  EXPECT_TRUE(dictionary_from_splb(back).atoms().isApprox(d.atoms(), 1e-15));
}

TEST(Splb, KeepsMetaBytesAndSpecialValues) {
  Matrix y(2, 2);
  y << std::numeric_limits<double>::infinity(), -0.0, 1e-310, 3.0;
  const ObservationBatch batch(y);
  const std::string meta = "{\"seed\":1,\"note\":\"a\\u0000b\"}";
  const SplbFile f = decode_splb(encode_splb(observations_splb(batch, meta)));
  ASSERT_NE(f.find("META"), nullptr);
  EXPECT_EQ(f.find("META")->bytes, meta);
  const Matrix& back = f.matrix("OBSV");
  EXPECT_EQ(std::memcmp(back.data(), y.data(), sizeof(double) * 4), 0);
  EXPECT_TRUE(std::signbit(back(0, 1)));
}

TEST(Splb, SaeRoundTrip) {
  const SaeParams p = init_sae(5, 9, 3);
  const SaeParams q = sae_from_splb(decode_splb(encode_splb(sae_splb(p))));
  EXPECT_EQ(q.enc_weight, p.enc_weight);
  EXPECT_EQ(q.enc_bias, p.enc_bias);
  EXPECT_EQ(q.decoder, p.decoder);
}

TEST(Splb, RejectsCorruptInput) {
  const std::string good = tiny_splb();
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_splb(bad_magic), IoError);
  std::string bad_version = good;
  bad_version[4] = 2;
  EXPECT_THROW(decode_splb(bad_version), IoError);
  for (std::size_t cut : {0u, 3u, 11u, 20u, 40u, 47u}) EXPECT_THROW(decode_splb(good.substr(0, cut)), IoError) << cut;
  EXPECT_THROW(decode_splb(good + "x"), IoError);
  EXPECT_THROW(decode_splb(good).matrix("OBSV"), IoError);
  EXPECT_THROW(read_splb("/nonexistent/dir/file.splb"), IoError);
}

TEST(Csv, SeventeenDigitsRoundTrip) {
  Rng rng = make_rng(9);
  for (int i = 0; i < 2000; ++i) {
    const double v = standard_normal(rng) * std::pow(10.0, double(int(rng() % 40)) - 20.0);
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_TRUE(std::isnan(parse_double(format_double(std::nan("")))));
  EXPECT_EQ(parse_double(format_double(-std::numeric_limits<double>::infinity())),
            -std::numeric_limits<double>::infinity());
  EXPECT_THROW(parse_double("1,5"), IoError);
  EXPECT_THROW(parse_double(""), IoError);
}

TEST(Csv, MatrixRoundTrip) {
  Rng rng = make_rng(2);
  const Matrix m = gaussian_matrix(6, 4, rng);
  const std::string text = matrix_csv(m, "z");
  EXPECT_EQ(text.substr(0, text.find('\n')), "z0,z1,z2,z3");
  EXPECT_EQ(parse_matrix_csv(text), m);
  EXPECT_THROW(parse_matrix_csv("a,b\n1,2\n3\n"), IoError);
}

}  // namespace
}  // namespace splin
