#include "doctest.h"
#include "oracles.hpp"
#include "ocrpipe/evalcer.hpp"
#include "ocrpipe/rng.hpp"
#include "ocrpipe/vote.hpp"

#include <filesystem>
#include <fstream>

using namespace ocrpipe;

namespace {

std::u32string random_word(Rng& rng, std::size_t max_len) {
  std::u32string s(rng.index(max_len + 1), U' ');
  for (auto& c : s) c = U"abcd"[rng.index(4)];
  return s;
}

}  // namespace

TEST_SUITE("vote") {

TEST_CASE("align_pair") {
  const auto same = align_pair(U"abc", U"abc");
  REQUIRE(same.size() == 3);
  for (const auto& c : same) CHECK(c.op == EditOp::match);

  CHECK(align_pair(U"abc", U"ac") == std::vector<AlignColumn>{{EditOp::match, U'a', U'a'},
                                                              {EditOp::remove, U'b', kEpsilon},
                                                              {EditOp::match, U'c', U'c'}});
  CHECK(align_pair(U"", U"xy") == std::vector<AlignColumn>{{EditOp::insert, kEpsilon, U'x'},
                                                           {EditOp::insert, kEpsilon, U'y'}});
  // a substitution is preferred to a delete + insert pair of equal cost
  CHECK(align_pair(U"ab", U"xb").front().op == EditOp::substitute);

  SUBCASE("cost equals the edit distance and columns reproduce both strings") {
    Rng rng(8);
    for (int i = 0; i < 50; ++i) {
      const auto a = random_word(rng, 12), b = random_word(rng, 12);
      const auto al = align_pair(a, b);
      CHECK(alignment_cost(al) == levenshtein(a, b));
      if (a.size() <= 8 && b.size() <= 8) CHECK(alignment_cost(al) == oracle::levenshtein(a, b));
      std::u32string ra, rb;
      for (const auto& c : al) {
        if (c.a != kEpsilon) ra.push_back(c.a);
        if (c.b != kEpsilon) rb.push_back(c.b);
        CHECK((c.op == EditOp::match) == (c.a == c.b));
      }
      CHECK(ra == a);
      CHECK(rb == b);
    }
  }
}

TEST_CASE("vote") {
  CHECK(vote(std::vector<std::u32string>(5, U"Zeitung")) == U"Zeitung");
  CHECK(vote({U"abc", U"abc", U"abd"}) == U"abc");
  CHECK(vote({U"abc", U"abd"}, {0.4, 0.9}) == U"abd");
  CHECK(vote({U"abc", U"abd"}) == U"abc");
  CHECK(vote({U"only"}) == U"only");
  CHECK(vote({U"", U"", U"x"}) == U"");
  CHECK(vote({U"ac", U"abc", U"abc"}) == U"abc");   // insertion outvotes the anchor
  CHECK(vote({U"abxc", U"abc", U"abc"}) == U"abc");  // anchor-only symbol is dropped
  CHECK_THROWS(vote(std::vector<std::u32string>{}));
  CHECK_THROWS(vote({U"a", U"b"}, {1.0}));

  FoldPredictions p{"l", {"dungen", "dungen", "bungen"}, {}};
  CHECK(vote(p) == "dungen");

  SUBCASE("non-tie columns are permutation invariant") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const std::u32string truth = random_word(rng, 15);
      std::vector<std::u32string> hyps(5, truth);
      // one substitution in a single hypothesis never changes a 4-1 plurality
      if (!truth.empty()) hyps[rng.index(5)][rng.index(truth.size())] = U'z';
      const auto v = vote(hyps);
      std::swap(hyps[0], hyps[4]);
      CHECK(vote(hyps) == v);
      CHECK(v == truth);
    }
  }
}

TEST_CASE("confusion network shape") {
  const auto net = confusion_network({U"abc", U"aXbc", U"ab"});
  REQUIRE(net.size() == 4);
  CHECK(net[1] == std::vector<char32_t>{kEpsilon, U'X', kEpsilon});
  CHECK(net[3] == std::vector<char32_t>{U'c', U'c', kEpsilon});
}

TEST_CASE("fold readers") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "ocrpipe_vote_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "l1.fold0.pred.txt") << "abc\n";
  std::ofstream(dir / "l1.fold1.pred.txt") << "abd\n";
  std::ofstream(dir / "l1.fold10.pred.txt") << "abc\n";
  std::ofstream(dir / "l1.pred.txt") << "ignored\n";
  const auto folds = read_fold_directory(dir);
  REQUIRE(folds.size() == 1);
  CHECK(folds[0].line_id == "l1");
  CHECK(folds[0].hypotheses == std::vector<std::string>{"abc", "abd", "abc"});
  CHECK(vote(folds[0]) == "abc");

  std::ofstream(dir / "folds.json") << R"([{"line_id": "x", "hypotheses": ["ab", "ac"], "confidences": [0.1, 0.8]}])";
  const auto js = read_fold_json(dir / "folds.json");
  REQUIRE(js.size() == 1);
  CHECK(vote(js[0]) == "ac");
  fs::remove_all(dir);
}

}  // TEST_SUITE
