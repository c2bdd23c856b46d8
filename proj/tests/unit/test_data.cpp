#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

#include "csocnn/data/dataset.hpp"
#include "csocnn/data/scaler.hpp"
#include "csocnn/data/split.hpp"
#include "csocnn/data/synthetic.hpp"
#include "csocnn/error.hpp"
#include "csocnn/random.hpp"
#include "support/temp_dir.hpp"

using namespace csocnn;
using namespace csocnn::data;

namespace {

CsvSchema small_schema(std::size_t features = 3) {
  CsvSchema s;
  s.expected_features = features;
  return s;
}

Dataset parse(const std::string& text, const CsvSchema& schema) {
  std::istringstream in(text);
  return parse_csv(in, schema);
}

std::vector<FlowRecord> column(std::initializer_list<double> values) {
  std::vector<FlowRecord> out;
  for (double v : values) out.push_back({{v}, 0});
  return out;
}

}  // namespace

TEST_CASE("label codec") {
  const auto codec = LabelCodec::apt_stages();
  REQUIRE(codec.size() == 5);
  CHECK(codec.names() ==
        std::vector<std::string>{"Benign", "Data", "Establish", "Lateral", "Reconn"});
  for (int c = 0; c < 5; ++c) CHECK(codec.encode(codec.decode(c)) == c);
  CHECK_THROWS_AS(codec.encode("Exfil"), LabelError);
  CHECK_THROWS_AS(codec.decode(5), LabelError);
  CHECK_THROWS_AS(LabelCodec({"a", "b", "a"}), LabelError);
}

TEST_CASE("csv loading") {
  SUBCASE("well-formed rows") {
    const auto ds = parse("a,b,Label,c\n1,2,x,3\n4,5,y,6\n7,8,x,9\n", small_schema());
    REQUIRE(ds.records.size() == 3);
    CHECK(ds.feature_names == std::vector<std::string>{"a", "b", "c"});
    CHECK(ds.records[1].features == std::vector<double>{4, 5, 6});
    CHECK(ds.codec.names() == std::vector<std::string>{"x", "y"});
    CHECK(ds.records[1].label == 1);
    CHECK(ds.stats.rows == 3);
  }
  SUBCASE("header only") {
    const auto ds = parse("a,b,c,Label\n", small_schema());
    CHECK(ds.records.empty());
    CHECK(ds.feature_names.size() == 3);
  }
  SUBCASE("non-finite cells are counted and kept") {
    const auto ds =
        parse("Flow Duration,b,c,Label\nInf,1,2,x\n3,NaN,-inf,y\n5,oops,7,x\n", small_schema());
    REQUIRE(ds.records.size() == 3);
    CHECK(ds.stats.inf_values == 2);
    CHECK(ds.stats.nan_values == 1);
    CHECK(ds.stats.unparseable_values == 1);
    CHECK(std::isinf(ds.records[0].features[0]));
    CHECK(std::isnan(ds.records[2].features[1]));

    const auto cleaned = clean_and_scale(ds.records);
    CHECK(cleaned.report.posinf_replaced == 1);
    CHECK(cleaned.report.neginf_replaced == 1);
    CHECK(cleaned.report.nan_replaced == 2);
    CHECK(cleaned.records.size() == 3);
    // +Inf takes the column max, which scales to 1.
    CHECK(cleaned.records[0].features[0] == 1.0);
    for (const auto& r : cleaned.records) {
      for (double v : r.features) {
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
  SUBCASE("ignored columns, quotes, BOM and CRLF") {
    CsvSchema s = small_schema(2);
    s.ignore_columns = {"Src IP"};
    const auto ds = parse("\xEF\xBB\xBF\"Src IP\",f1,f2,Label\r\n\"10.0.0.1\",1.5,2,x\r\n", s);
    REQUIRE(ds.records.size() == 1);
    CHECK(ds.feature_names == std::vector<std::string>{"f1", "f2"});
    CHECK(ds.records[0].features == std::vector<double>{1.5, 2});
  }
  SUBCASE("fixed class order") {
    CsvSchema s = small_schema(1);
    s.class_names = {"z", "y"};
    const auto ds = parse("f,Label\n1,y\n2,z\n", s);
    CHECK(ds.records[0].label == 1);
    CHECK(ds.records[1].label == 0);
    CHECK_THROWS_AS(parse("f,Label\n1,q\n", s), ParseError);
  }
  SUBCASE("schema errors") {
    CHECK_THROWS_AS(parse("", small_schema()), SchemaError);
    CHECK_THROWS_AS(parse("a,b,c\n1,2,3\n", small_schema()), SchemaError);
    CHECK_THROWS_AS(parse("a,b,Label\n1,2,x\n", small_schema()), SchemaError);
    CHECK_THROWS_AS(parse("a,Label,b,Label,c\n", small_schema()), SchemaError);
    CsvSchema unlabeled = small_schema();
    unlabeled.require_label = false;
    CHECK_NOTHROW(parse("a,b,c\n1,2,3\n", unlabeled));
  }
  SUBCASE("ragged row reports its line") {
    try {
      parse("a,b,c,Label\n1,2,3,x\n1,2,x\n", small_schema());
      FAIL("no ParseError");
    } catch (const ParseError& e) {
      CHECK(e.row() == 3);
    }
    CHECK_THROWS_AS(parse("a,b,c,Label\n1,2,3,\n", small_schema()), ParseError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_csv("/nonexistent/flows.csv", small_schema()), IoError);
  }
}

TEST_CASE("streaming reader") {
  std::istringstream in("a,b\n1,2\n\n3,4\n");
  CsvSchema s = small_schema(2);
  s.require_label = false;
  CsvReader reader(in, s);
  CHECK_FALSE(reader.has_label());
  auto r1 = reader.next();
  auto r2 = reader.next();
  REQUIRE(r1);
  REQUIRE(r2);
  CHECK(r2->line == 4);
  CHECK_FALSE(r2->label);
  CHECK_FALSE(reader.next());
  CHECK(reader.stats().rows == 2);
}

TEST_CASE("write_csv round trip is exact") {
  test::TempDir dir;
  auto ds = make_synthetic_blobs(40, 5, 6, 3.0, 9);
  ds.records[3].features[2] = 0.1 + 0.2;
  ds.records[4].features[0] = -1.0e-310;
  {
    std::ofstream out(dir / "blobs.csv");
    write_csv(out, ds);
  }
  CsvSchema s = small_schema(6);
  s.class_names = ds.codec.names();
  const auto back = load_csv(dir / "blobs.csv", s);
  CHECK(back.feature_names == ds.feature_names);
  CHECK(back.records == ds.records);

  std::ostringstream unlabeled;
  write_csv(unlabeled, ds, "Label", false);
  CHECK(unlabeled.str().find("Benign") == std::string::npos);

  ds.records[0].features.pop_back();
  std::ostringstream bad;
  CHECK_THROWS_AS(write_csv(bad, ds), ShapeError);
}

TEST_CASE("min-max scaling") {
  auto r = clean_and_scale(column({0, 5, 10}));
  CHECK(r.records[0].features[0] == 0.0);
  CHECK(r.records[1].features[0] == 0.5);
  CHECK(r.records[2].features[0] == 1.0);
  CHECK(r.stats.median[0] == 5.0);

  auto c = clean_and_scale(column({7, 7, 7}));
  for (const auto& rec : c.records) CHECK(rec.features[0] == 0.0);

  auto even = fit_scaler(column({1, 4, 2, 10}));
  CHECK(even.median[0] == 3.0);

  // Out-of-range evaluation values are clamped and counted.
  auto val = column({12, -3, 4});
  const auto report = apply_scaler(val, r.stats);
  CHECK(report.clamped == 2);
  CHECK(val[0].features[0] == 1.0);
  CHECK(val[1].features[0] == 0.0);
  CHECK(val[2].features[0] == 0.4);

  auto wide = column({1});
  wide[0].features.push_back(2);
  CHECK_THROWS_AS(apply_scaler(wide, r.stats), ShapeError);
  CHECK_THROWS_AS(fit_scaler({}), PreconditionError);
}

TEST_CASE("scaler statistics serialization") {
  const auto ds = make_synthetic_blobs(100, 5, 8, 4.0, 2);
  const auto stats = fit_scaler(ds.records);
  const auto back = ScalerStats::from_json(stats.to_json());
  CHECK(back == stats);
  CHECK(back.fingerprint() == stats.fingerprint());

  auto tampered = stats.to_json();
  tampered["max"][0] = tampered["max"][0].get<double>() + 1.0;
  CHECK_THROWS_AS(ScalerStats::from_json(tampered), FormatError);
  CHECK_THROWS_AS(ScalerStats::from_json(nlohmann::json{{"min", {1.0}}}), FormatError);

  auto other = stats;
  other.median[3] += 1e-9;
  CHECK(other.fingerprint() != stats.fingerprint());
}

TEST_CASE("scaler is fitted on the training split only") {
  const auto ds = make_synthetic_blobs(500, 5, 10, 4.0, 4);
  const auto parts = split(ds.records, {});
  const auto cleaned = clean_and_scale(parts.train);
  CHECK(cleaned.stats == fit_scaler(parts.train));

  std::vector<FlowRecord> pooled = parts.train;
  pooled.insert(pooled.end(), parts.val.begin(), parts.val.end());
  CHECK_FALSE(fit_scaler(pooled) == cleaned.stats);
}

TEST_CASE("split sizes") {
  CHECK(split_sizes(76754, {}) == SplitSizes{55262, 6141, 15351});
  CHECK(split_sizes(10, {}) == SplitSizes{7, 1, 2});
  CHECK(split_sizes(0, {}) == SplitSizes{0, 0, 0});
  for (std::size_t n = 1; n < 500; ++n) {
    const auto s = split_sizes(n, {});
    CHECK(s.train + s.val + s.test == n);
  }
}

TEST_CASE("stratified split of the full-size label vector") {
  // Class supports scaled up from the test split (8716, 2060, 1725, 490, 2360).
  const std::vector<std::size_t> support{43579, 10301, 8625, 2449, 11800};
  std::vector<int> labels;
  for (std::size_t c = 0; c < support.size(); ++c) {
    labels.insert(labels.end(), support[c], static_cast<int>(c));
  }
  REQUIRE(labels.size() == 76754);
  Rng rng(1);
  shuffle(std::span(labels), rng);

  SplitSpec spec;
  spec.seed = 17;
  const auto idx = split_indices(labels, spec);
  CHECK(idx.train.size() == 55262);
  CHECK(idx.val.size() == 6141);
  CHECK(idx.test.size() == 15351);

  std::vector<int> seen(labels.size(), 0);
  for (const auto* part : {&idx.train, &idx.val, &idx.test}) {
    CHECK(std::is_sorted(part->begin(), part->end()));
    for (auto i : *part) ++seen[i];
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));

  const double n = static_cast<double>(labels.size());
  const std::pair<const std::vector<std::size_t>*, double> parts[] = {
      {&idx.train, 55262.0}, {&idx.val, 6141.0}, {&idx.test, 15351.0}};
  for (const auto& [part, size] : parts) {
    std::vector<std::size_t> count(support.size(), 0);
    for (auto i : *part) ++count[static_cast<std::size_t>(labels[i])];
    for (std::size_t c = 0; c < support.size(); ++c) {
      const double share = static_cast<double>(support[c]) * size / n;
      CHECK(std::abs(static_cast<double>(count[c]) - share) <= 1.0);
    }
  }

  const auto again = split_indices(labels, spec);
  CHECK(again.train == idx.train);
  CHECK(again.test == idx.test);
  spec.seed = 18;
  CHECK(split_indices(labels, spec).test != idx.test);
}

TEST_CASE("split edge cases") {
  const std::vector<int> tiny{0, 0, 1};
  CHECK_THROWS_AS(split_indices(tiny, {}), StratifyError);
  SplitSpec plain;
  plain.stratified = false;
  const auto idx = split_indices(tiny, plain);
  CHECK(idx.train.size() + idx.val.size() + idx.test.size() == 3);

  const auto ds = make_synthetic_blobs(10, 2, 3, 2.0, 1);
  const auto parts = split(ds.records, {});
  CHECK(parts.train.size() == 7);
  CHECK(parts.val.size() == 1);
  CHECK(parts.test.size() == 2);
}

TEST_CASE("network input layout") {
  const auto ds = make_synthetic_blobs(3, 3, kFlowFeatureCount, 2.0, 5);
  const auto one = to_network_input(std::span(ds.records).first(1));
  CHECK(one.batch.shape() == nn::Shape{1, 75, 1, 1});

  const auto in = to_network_input<double>(ds.records);
  CHECK(in.batch.shape() == nn::Shape{3, 75, 1, 1});
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(in.labels[i] == ds.records[i].label);
    for (std::size_t k = 0; k < 75; ++k) {
      CHECK(in.batch.at({i, k, 0, 0}) == ds.records[i].features[k]);
    }
    CHECK(ds.codec.encode(ds.codec.decode(in.labels[i])) == ds.records[i].label);
  }
  auto ragged = ds.records;
  ragged[1].features.pop_back();
  CHECK_THROWS_AS(to_network_input(ragged), ShapeError);
}

TEST_CASE("synthetic blobs") {
  const auto ds = make_synthetic_blobs(1000, 5, kFlowFeatureCount, 6.0, 3);
  CHECK(ds.codec == LabelCodec::apt_stages());
  CHECK(ds.feature_names.size() == 75);
  std::map<int, int> per_class;
  for (const auto& r : ds.records) ++per_class[r.label];
  for (int c = 0; c < 5; ++c) CHECK(per_class[c] == 200);

  const auto odd = make_synthetic_blobs(7, 3, 4, 1.0, 3);
  std::map<int, int> odd_count;
  for (const auto& r : odd.records) ++odd_count[r.label];
  CHECK(odd_count[0] == 3);
  CHECK(odd_count[1] == 2);
  CHECK(odd_count[2] == 2);

  CHECK(make_synthetic_blobs(50, 5, 6, 3.0, 8).records ==
        make_synthetic_blobs(50, 5, 6, 3.0, 8).records);

  // Nearest-centroid classifier, centroids from a held-out half.
  auto nearest_centroid_accuracy = [](const Dataset& d) {
    const std::size_t dim = d.feature_names.size(), k = d.codec.size();
    std::vector<std::vector<double>> centre(k, std::vector<double>(dim, 0.0));
    std::vector<double> count(k, 0.0);
    const std::size_t half = d.records.size() / 2;
    for (std::size_t i = 0; i < half; ++i) {
      const auto& r = d.records[i];
      for (std::size_t j = 0; j < dim; ++j) centre[r.label][j] += r.features[j];
      count[r.label] += 1.0;
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (auto& v : centre[c]) v /= count[c];
    }
    std::size_t hit = 0;
    for (std::size_t i = half; i < d.records.size(); ++i) {
      const auto& r = d.records[i];
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        double dist = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
          dist += (r.features[j] - centre[c][j]) * (r.features[j] - centre[c][j]);
        }
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      hit += best == static_cast<std::size_t>(r.label) ? 1 : 0;
    }
    return static_cast<double>(hit) / static_cast<double>(d.records.size() - half);
  };

  auto shuffled = [](Dataset d, std::uint64_t seed) {
    Rng rng(seed);
    shuffle(std::span(d.records), rng);
    return d;
  };
  CHECK(nearest_centroid_accuracy(shuffled(make_synthetic_blobs(2000, 5, 75, 6.0, 21), 1)) > 0.99);
  CHECK(nearest_centroid_accuracy(shuffled(make_synthetic_blobs(2000, 5, 75, 0.0, 21), 1)) < 0.35);
}
