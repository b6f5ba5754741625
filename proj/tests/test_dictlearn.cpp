#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "specdict/dictionary.hpp"
#include "specdict/errors.hpp"
#include "support.hpp"

using namespace specdict;

namespace {

FeatureMeta test_meta(uint32_t fft_size) {
  return FeatureMeta{16000, fft_size, 60.0, 15.0};
}

// Meta whose bin count matches vectors of size p (p = fft/2 + 1).
FeatureMeta meta_for_bins(Eigen::Index p) {
  return test_meta(static_cast<uint32_t>(2 * (p - 1)));
}

double max_pairwise_intra(const Eigen::MatrixXd& atoms, Eigen::Index count) {
  double worst = 0.0;
  for (Eigen::Index a = 0; a < count; ++a) {
    for (Eigen::Index b = a + 1; b < count; ++b) {
      worst = std::max(worst, cosine_similarity(atoms.col(a), atoms.col(b)));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("cosine similarity") {
  Eigen::VectorXd a(3), b(3);
  a << 1, 2, 3;
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  a.resize(2);
  b.resize(2);
  a << 1, 0;
  b << 0, 1;
  CHECK(cosine_similarity(a, b) == 0.0);

  a << 1, 1;
  b << 1, 0;
  CHECK(cosine_similarity(a, b) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

  Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_WITH_AS(static_cast<void>(cosine_similarity(a, zero)), "degenerate vector",
                       DataError);
}

TEST_CASE("orthogonal features are all accepted") {
  const Eigen::Index p = 9;
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
  auto features = testsupport::to_features(eye);

  LearnConfig cfg;
  cfg.atoms_per_source = static_cast<uint32_t>(p);
  cfg.intra_threshold = 1e-9;  // anything >= 0 accepts mutually orthogonal features
  cfg.rng_seed = 3;

  SourceDictionary d = learn_dictionary(features, {}, cfg, "ortho", meta_for_bins(p));
  CHECK(d.accepted == p);
  CHECK(d.atoms.cols() == p);
  // every feature appears exactly once, in RNG order
  Eigen::VectorXd column_sums = d.atoms.rowwise().sum();
  CHECK((column_sums.array() == 1.0).all());
}

TEST_CASE("identical features accept one atom and fall back for the rest") {
  const Eigen::Index p = 6;
  Eigen::VectorXd f = Eigen::VectorXd::Constant(p, 1.0);
  f /= f.norm();
  std::vector<FeatureVector> features(10, FeatureVector{f, false});

  LearnConfig cfg;
  cfg.atoms_per_source = 5;
  cfg.rng_seed = 1;

  SourceDictionary d = learn_dictionary(features, {}, cfg, "flat", meta_for_bins(p));
  CHECK(d.accepted == 1);
  CHECK(d.atoms.cols() == 5);
  for (Eigen::Index c = 0; c < 5; ++c) CHECK((d.atoms.col(c) - f).norm() == 0.0);
}

TEST_CASE("similarity thresholds hold for accepted atoms") {
  std::mt19937_64 rng(17);
  const Eigen::Index p = 24;
  auto features_a = testsupport::to_features(testsupport::random_dictionary(p, 150, rng));
  auto features_b = testsupport::to_features(testsupport::random_dictionary(p, 150, rng));

  LearnConfig cfg;
  cfg.intra_threshold = 0.9;
  cfg.inter_threshold = 0.92;
  cfg.atoms_per_source = 40;
  cfg.rng_seed = 99;

  FeatureMeta meta = meta_for_bins(p);
  SourceDictionary first = learn_dictionary(features_a, {}, cfg, "a", meta);
  SourceDictionary second = learn_dictionary(features_b, {first}, cfg, "b", meta);

  CHECK(max_pairwise_intra(first.atoms, first.accepted) <= cfg.intra_threshold + 1e-12);
  CHECK(max_pairwise_intra(second.atoms, second.accepted) <= cfg.intra_threshold + 1e-12);
  for (Eigen::Index a = 0; a < second.accepted; ++a) {
    for (Eigen::Index b = 0; b < first.atoms.cols(); ++b) {
      CHECK(cosine_similarity(second.atoms.col(a), first.atoms.col(b)) <=
            cfg.inter_threshold + 1e-12);
    }
  }

  SUBCASE("learning a later source does not touch earlier dictionaries") {
    Eigen::MatrixXd before = first.atoms;
    static_cast<void>(learn_dictionary(features_b, {first}, cfg, "again", meta));
    CHECK(before == first.atoms);
  }
}

TEST_CASE("learning is deterministic for a fixed seed") {
  std::mt19937_64 rng(4);
  const Eigen::Index p = 16;
  auto features = testsupport::to_features(testsupport::random_dictionary(p, 80, rng));

  LearnConfig cfg;
  cfg.atoms_per_source = 20;
  cfg.rng_seed = 1234;

  SourceDictionary d1 = learn_dictionary(features, {}, cfg, "x", meta_for_bins(p));
  SourceDictionary d2 = learn_dictionary(features, {}, cfg, "x", meta_for_bins(p));
  CHECK(std::memcmp(d1.atoms.data(), d2.atoms.data(),
                    sizeof(double) * static_cast<size_t>(d1.atoms.size())) == 0);
}

TEST_CASE("learning errors") {
  const Eigen::Index p = 8;
  std::mt19937_64 rng(2);
  auto few = testsupport::to_features(testsupport::random_dictionary(p, 5, rng));

  LearnConfig cfg;
  cfg.atoms_per_source = 10;
  CHECK_THROWS_AS(static_cast<void>(learn_dictionary(few, {}, cfg, "few", meta_for_bins(p))),
                  DataError);

  cfg.atoms_per_source = 3;
  SourceDictionary base = learn_dictionary(few, {}, cfg, "base", meta_for_bins(p));
  FeatureMeta other = meta_for_bins(p);
  other.sample_rate = 8000;
  CHECK_THROWS_AS(static_cast<void>(learn_dictionary(few, {base}, cfg, "clash", other)),
                  DataError);

  LearnConfig bad;
  bad.intra_threshold = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("concat layout and metadata checks") {
  std::mt19937_64 rng(5);
  const Eigen::Index p = 8;
  FeatureMeta meta = meta_for_bins(p);

  LearnConfig cfg;
  cfg.atoms_per_source = 100;
  cfg.intra_threshold = 1.0;  // non-negative vectors never exceed cosine 1
  cfg.inter_threshold = 1.0;

  std::vector<SourceDictionary> dicts;
  for (int s = 0; s < 12; ++s) {
    auto features = testsupport::to_features(testsupport::random_dictionary(p, 120, rng));
    dicts.push_back(learn_dictionary(features, dicts, cfg, "s" + std::to_string(s), meta));
  }

  SUBCASE("single dictionary") {
    ConcatDictionary one = concat({dicts[0]});
    CHECK(one.offsets == std::vector<Eigen::Index>{0});
    CHECK(one.total_atoms() == 100);
    CHECK(one.atoms == dicts[0].atoms);
  }

  SUBCASE("two dictionaries") {
    ConcatDictionary two = concat({dicts[0], dicts[1]});
    CHECK(two.offsets == std::vector<Eigen::Index>{0, 100});
    CHECK(two.total_atoms() == 200);
  }

  SUBCASE("twelve dictionaries of 100 atoms give 1200 columns") {
    ConcatDictionary all = concat(dicts);
    CHECK(all.total_atoms() == 1200);
    CHECK(all.source_count() == 12);
    for (size_t i = 0; i < 12; ++i) {
      CHECK(all.offsets[i] == static_cast<Eigen::Index>(100 * i));
    }
  }

  SUBCASE("meta mismatch is rejected") {
    SourceDictionary odd = dicts[1];
    odd.meta.features.sample_rate = 44100;
    CHECK_THROWS_AS(static_cast<void>(concat({dicts[0], odd})), DataError);
  }

  SUBCASE("empty concat is rejected") { CHECK_THROWS_AS(static_cast<void>(concat({})), DataError); }
}

TEST_CASE("dictionary file round trip") {
  std::mt19937_64 rng(31);
  const Eigen::Index p = 9;
  FeatureMeta meta = meta_for_bins(p);

  LearnConfig cfg;
  cfg.atoms_per_source = 7;
  cfg.intra_threshold = 1.0;
  cfg.inter_threshold = 1.0;
  cfg.rng_seed = 77;

  std::vector<SourceDictionary> dicts;
  for (int s = 0; s < 3; ++s) {
    auto features = testsupport::to_features(testsupport::random_dictionary(p, 20, rng));
    dicts.push_back(learn_dictionary(features, dicts, cfg, "src" + std::to_string(s), meta));
  }
  ConcatDictionary dict = concat(dicts);

  testsupport::TempDir tmp("dict");
  auto path = tmp.path() / "test.sdct";
  save_dictionary(path, dict);

  SUBCASE("load restores atoms and meta bit-exactly") {
    ConcatDictionary back = load_dictionary(path);
    REQUIRE(back.source_count() == 3);
    CHECK(back.meta() == dict.meta());
    CHECK(back.labels() == dict.labels());
    CHECK(back.offsets == dict.offsets);
    REQUIRE(back.atoms.size() == dict.atoms.size());
    CHECK(std::memcmp(back.atoms.data(), dict.atoms.data(),
                      sizeof(double) * static_cast<size_t>(dict.atoms.size())) == 0);
  }

  SUBCASE("saving twice produces identical bytes") {
    auto path2 = tmp.path() / "test2.sdct";
    save_dictionary(path2, dict);
    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
  }

  SUBCASE("truncated file names the offset") {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto cut = tmp.path() / "cut.sdct";
    std::ofstream(cut, std::ios::binary) << bytes.substr(0, bytes.size() / 2);
    try {
      static_cast<void>(load_dictionary(cut));
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("truncated at offset") != std::string::npos);
    }
  }

  SUBCASE("wrong magic is not a dictionary file") {
    auto bogus = tmp.path() / "bogus.sdct";
    std::ofstream(bogus, std::ios::binary) << "XXXX not a dictionary";
    try {
      static_cast<void>(load_dictionary(bogus));
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("not a dictionary file") != std::string::npos);
    }
  }

  SUBCASE("trailing bytes are rejected") {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto padded = tmp.path() / "padded.sdct";
    std::ofstream(padded, std::ios::binary) << bytes << "junk";
    CHECK_THROWS_AS(static_cast<void>(load_dictionary(padded)), DataError);
  }
}
