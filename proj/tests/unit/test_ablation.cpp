#include "dyntx/ablation.hpp"
#include "support/fixtures.hpp"
#include "doctest.h"

using namespace dyntx;

TEST_SUITE("ablation") {

TEST_CASE("every variant is trained on the same corpus with the same seed") {
  auto train_corpus = dyntx::testing::random_corpus(4, 600, 16, 4);
  auto heldout = dyntx::testing::random_corpus(3, 700, 16, 4);
  auto cfg = dyntx::testing::small_training(3);
  AblationOptions opts;
  opts.out_dir = dyntx::testing::temp_dir("ablation");
  opts.self_items = 2;
  auto report = run_ablation(train_corpus, heldout, cfg, opts);
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[0].variant == EncodingVariant::Raw);
  CHECK(report.rows[1].variant == EncodingVariant::PixelDiff);
  CHECK(report.rows[2].variant == EncodingVariant::FeatureDiff);
  for (const auto& r : report.rows) {
    CHECK(r.corpus_hash == corpus_hash(train_corpus));
    CHECK(r.heldout_hash == corpus_hash(heldout));
    CHECK(r.seed == cfg.seed);
    CHECK(r.steps == 3);
    CHECK(r.cross_pairs == 6);
    CHECK(std::filesystem::exists(opts.out_dir / to_string(r.variant) / "checkpoints" / checkpoint_name(3)));
  }
  auto csv = ablation_csv(report);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  auto md = ablation_markdown(report);
  for (const char* v : {"RAW", "PIXEL_DIFF", "FEATURE_DIFF"}) CHECK(md.find(v) != std::string::npos);
  CHECK(std::filesystem::exists(opts.out_dir / "ablation.csv"));

  // A second call reuses the trained checkpoints and reproduces the report.
  auto again = run_ablation(train_corpus, heldout, cfg, opts);
  CHECK(ablation_csv(again) == csv);
}

}  // TEST_SUITE
