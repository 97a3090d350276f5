#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "surf/dataset.hpp"
#include "surf/dataset_io.hpp"
#include "surf/result.hpp"
#include "surf/rng.hpp"
#include "surf/simulate.hpp"

using namespace surf;

namespace {

FeedbackDataset small_dataset() {
  // 3 items, 2 users, L=3; user 1 votes on items 0,2; user 2 on item 1.
  return FeedbackDataset(LabelSet(3), 3, 2, {0, 1, 2},
                         {{1, 0, 0}, {2, 1, 1}, {1, 2, 2}},
                         std::vector<Label>{0, 1, 2});
}

}  // namespace

TEST_CASE("label set bounds") {
  CHECK_THROWS_AS(LabelSet(1), std::invalid_argument);
  LabelSet ls(4);
  CHECK(ls.contains(0));
  CHECK(ls.contains(3));
  CHECK_FALSE(ls.contains(4));
  CHECK_FALSE(ls.contains(-1));
}

TEST_CASE("confusion matrix validation") {
  CHECK_NOTHROW(ConfusionMatrix(2, {0.7, 0.3, 0.3, 0.7}));
  CHECK_THROWS_AS(ConfusionMatrix(2, {0.7, 0.4, 0.3, 0.7}), std::invalid_argument);
  CHECK_THROWS_AS(ConfusionMatrix(2, {1.2, -0.2, 0.3, 0.7}), std::invalid_argument);
  CHECK_THROWS_AS(ConfusionMatrix(2, {0.7, 0.3}), std::invalid_argument);
  const auto id = ConfusionMatrix::identity(3);
  CHECK(id.at(1, 1) == 1.0);
  CHECK(id.at(1, 2) == 0.0);
}

TEST_CASE("dataset construction rejects unrepresentable feedback") {
  CHECK_THROWS_AS(FeedbackDataset(LabelSet(2), 2, 1, {0, 1}, {{2, 0, 0}}, std::nullopt),
                  std::invalid_argument);  // user out of range
  CHECK_THROWS_AS(FeedbackDataset(LabelSet(2), 2, 1, {0, 1}, {{1, 5, 0}}, std::nullopt),
                  std::invalid_argument);  // item out of range
  CHECK_THROWS_AS(
      FeedbackDataset(LabelSet(2), 2, 1, {0, 1}, {{1, 0, 0}, {1, 0, 1}}, std::nullopt),
      std::invalid_argument);  // duplicate (user, item)
}

TEST_CASE("dataset views") {
  const auto ds = small_dataset();
  CHECK(ds.num_feedback() == 3);
  REQUIRE(ds.votes_on_item(0).size() == 1);
  CHECK(ds.votes_on_item(0)[0].user == 1);
  CHECK(ds.votes_on_item(0)[0].label == 0);
  REQUIRE(ds.votes_from_user(1).size() == 2);
  CHECK(ds.votes_from_user(1)[0].item == 0);
  CHECK(ds.votes_from_user(1)[1].item == 2);
  REQUIRE(ds.votes_from_user(2).size() == 1);
  CHECK(ds.votes_from_user(2)[0].item == 1);
}

TEST_CASE("validate_dataset") {
  SUBCASE("well-formed") { CHECK(validate_dataset(small_dataset()).empty()); }

  SUBCASE("label out of range") {
    FeedbackDataset ds(LabelSet(3), 2, 1, {0, 1}, {{1, 0, 3}}, std::nullopt);
    const auto v = validate_dataset(ds);
    REQUIRE(v.size() == 1);
    CHECK(v[0].item == 0);
    CHECK(v[0].user == 1);
    CHECK(v[0].reason.find("out of range") != std::string::npos);
  }

  SUBCASE("classifier must label every item") {
    FeedbackDataset ds(LabelSet(3), 3, 1, {0, 1}, {{1, 0, 0}}, std::nullopt);
    const auto v = validate_dataset(ds);
    REQUIRE(!v.empty());
    CHECK(v[0].reason.find("classifier must label every item") != std::string::npos);
  }

  SUBCASE("classifier label out of range") {
    FeedbackDataset ds(LabelSet(2), 2, 1, {0, 7}, {}, std::nullopt);
    const auto v = validate_dataset(ds);
    REQUIRE(v.size() == 1);
    CHECK(v[0].item == 1);
  }

  SUBCASE("ground truth out of range") {
    FeedbackDataset ds(LabelSet(2), 1, 1, {0}, {}, std::vector<Label>{5});
    CHECK(validate_dataset(ds).size() == 1);
  }
}

TEST_CASE("accuracy") {
  CHECK(accuracy(std::vector<Label>{1, 2, 3}, std::vector<Label>{1, 2, 3}) == 1.0);
  CHECK(accuracy(std::vector<Label>{1, 2, 3}, std::vector<Label>{1, 2, 0}) ==
        doctest::Approx(2.0 / 3.0));
  CHECK(accuracy(std::vector<Label>{0, 0, 0, 0}, std::vector<Label>{0, 1, 1, 1}) == 0.25);
  CHECK_THROWS_AS(accuracy(std::vector<Label>{1}, std::vector<Label>{1, 2}),
                  std::invalid_argument);
  CHECK_THROWS_AS(accuracy(std::vector<Label>{}, std::vector<Label>{}),
                  std::invalid_argument);
}

TEST_CASE("accuracy is permutation-equivariant") {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.next_below(40);
    std::vector<Label> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<Label>(rng.next_below(4));
      b[i] = static_cast<Label>(rng.next_below(4));
    }
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      std::swap(perm[i - 1], perm[rng.next_below(i)]);
    }
    std::vector<Label> ap(n), bp(n);
    for (std::size_t i = 0; i < n; ++i) {
      ap[i] = a[perm[i]];
      bp[i] = b[perm[i]];
    }
    CHECK(accuracy(a, b) == accuracy(ap, bp));
  }
}

TEST_CASE("argmax tie-break is lowest index") {
  CHECK(argmax_lowest(std::vector<double>{0.2, 0.4, 0.4}) == 1);
  CHECK(argmax_lowest(std::vector<double>{0.5, 0.5}) == 0);
  CHECK(argmax_lowest(std::vector<double>{0.1, 0.2, 0.7}) == 2);
}

TEST_CASE("jsonl round trip is byte-exact") {
  SplitMix64 seeds(123);
  for (int trial = 0; trial < 8; ++trial) {
    SimConfig cfg;
    cfg.num_items = 1 + seeds.next_below(40);
    cfg.num_users = 1 + static_cast<int>(seeds.next_below(6));
    cfg.feedback_size = 1 + static_cast<int>(seeds.next_below(cfg.num_users));
    cfg.label_count = 2 + static_cast<int>(seeds.next_below(9));
    cfg.user_error = 0.3;
    cfg.classifier_error = 0.2;
    cfg.busyness = 0.4;
    cfg.seed = seeds.next_u64();
    const auto ds = generate_dataset(cfg);

    // the simulator always emits valid datasets
    CHECK(validate_dataset(ds).empty());

    std::ostringstream first;
    write_dataset_jsonl(ds, first);
    std::istringstream in(first.str());
    const auto back = read_dataset_jsonl(in);
    std::ostringstream second;
    write_dataset_jsonl(back, second);
    CHECK(first.str() == second.str());
  }
}

TEST_CASE("jsonl reader strictness") {
  const std::string header = R"({"L":3,"N":1,"K":2})";
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_dataset_jsonl(in);
  };

  SUBCASE("minimal valid file") {
    const auto ds = parse(header + "\n" + R"({"i":0,"clf":1,"fb":{"2":0}})" + "\n");
    CHECK(ds.num_items() == 1);
    CHECK_FALSE(ds.has_ground_truth());
    CHECK(ds.votes_on_item(0)[0].user == 2);
  }
  SUBCASE("unknown header field") {
    CHECK_THROWS_AS(parse(R"({"L":3,"N":1,"K":2,"x":1})" + std::string("\n")),
                    DatasetFormatError);
  }
  SUBCASE("unknown record field") {
    CHECK_THROWS_AS(parse(header + "\n" + R"({"i":0,"clf":1,"fb":{},"note":"hi"})" + "\n"),
                    DatasetFormatError);
  }
  SUBCASE("missing fb") {
    CHECK_THROWS_AS(parse(header + "\n" + R"({"i":0,"clf":1})" + "\n"), DatasetFormatError);
  }
  SUBCASE("bad fb user key") {
    CHECK_THROWS_AS(parse(header + "\n" + R"({"i":0,"clf":1,"fb":{"7":0}})" + "\n"),
                    DatasetFormatError);
    CHECK_THROWS_AS(parse(header + "\n" + R"({"i":0,"clf":1,"fb":{"zero":0}})" + "\n"),
                    DatasetFormatError);
  }
  SUBCASE("missing records") {
    CHECK_THROWS_AS(parse(R"({"L":3,"N":2,"K":1})" + std::string("\n") +
                          R"({"i":0,"clf":1,"fb":{}})" + "\n"),
                    DatasetFormatError);
  }
  SUBCASE("duplicate item") {
    CHECK_THROWS_AS(parse(R"({"L":3,"N":2,"K":1})" + std::string("\n") +
                          R"({"i":0,"clf":1,"fb":{}})" + "\n" +
                          R"({"i":0,"clf":1,"fb":{}})" + "\n"),
                    DatasetFormatError);
  }
  SUBCASE("trailing content") {
    CHECK_THROWS_AS(parse(header + "\n" + R"({"i":0,"clf":1,"fb":{}})" + "\n" + "{}\n"),
                    DatasetFormatError);
  }
  SUBCASE("mixed truth presence") {
    CHECK_THROWS_AS(parse(R"({"L":3,"N":2,"K":1})" + std::string("\n") +
                          R"({"i":0,"truth":1,"clf":1,"fb":{}})" + "\n" +
                          R"({"i":1,"clf":1,"fb":{}})" + "\n"),
                    DatasetFormatError);
  }
  SUBCASE("out-of-range label is readable, validation reports it") {
    const auto ds = parse(header + "\n" + R"({"i":0,"clf":1,"fb":{"1":9}})" + "\n");
    CHECK(validate_dataset(ds).size() == 1);
  }
}

TEST_CASE("posterior table row sums") {
  PosteriorTable p(2, 2);
  p.row(0)[0] = 0.5;
  p.row(0)[1] = 0.5;
  p.row(1)[0] = 0.7;
  p.row(1)[1] = 0.2;
  CHECK(p.max_row_sum_error() == doctest::Approx(0.1));
}
