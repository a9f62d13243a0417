#include <gtest/gtest.h>

#include "judgealign/report/report.hpp"

namespace ja = judgealign;
using ja::json;

namespace {

ja::MisalignmentCell cell(std::string judge, std::string item, double point, double lo, double hi, double beta_h) {
  return ja::judge_misalignment({item, point, lo, hi, 0.95, 1000, 0.1}, beta_h, std::move(judge));
}

std::vector<ja::MisalignmentCell> grid_2x3() {
  std::vector<ja::MisalignmentCell> cells;
  for (const auto* j : {"judge-a", "judge-b"}) {
    cells.push_back(cell(j, "Naming", 0.4, 0.2, 0.6, 0.1));
    cells.push_back(cell(j, "Error handling, strict", -0.2, -0.5, 0.1, 0.0));
    cells.push_back(cell(j, "Scope", 1.0, 0.8, 1.2, 0.3));
  }
  return cells;
}

ja::fs::path tmp(const std::string& name) {
  const auto d = ja::fs::temp_directory_path() / "judgealign_report_test";
  ja::fs::create_directories(d);
  return d / name;
}

}  // namespace

TEST(Heatmap, LongFormRowsAndSignConvention) {
  const auto cells = grid_2x3();
  const std::vector<ja::PooledEstimate> pooled{ja::rubric_misalignment({0.0, 0.5, 0.1}, 2, 0.1, ja::PooledTest::pooled_se,
                                                                       0.0, 0.95, "Naming")};
  const auto t = ja::emit_heatmap(cells, pooled, ja::Modality::edit, tmp("heatmap"));
  const auto csv = ja::read_file(tmp("heatmap.csv"));
  const auto lines = ja::text::split_lines(csv);
  ASSERT_EQ(lines.size(), 7u);
  EXPECT_EQ(lines[0], ja::kHeatmapHeader);
  EXPECT_EQ(lines[1], "judge-a,edit,Naming,0.300000,0.200000,0.600000,1,0.500000,0.100000,4.000000,1");
  EXPECT_EQ(lines[2], "judge-a,edit,\"Error handling, strict\",-0.200000,-0.500000,0.100000,0,,,,");
  EXPECT_EQ(lines[3].substr(0, 27), "judge-a,edit,Scope,0.700000");
  EXPECT_EQ(lines[4].substr(0, 7), "judge-b");
}

TEST(Heatmap, JsonRoundTripAndDeterminism) {
  const auto cells = grid_2x3();
  const auto t = ja::emit_heatmap(cells, {}, ja::Modality::chat, tmp("rt"));
  const auto back = ja::heatmap_from_json(ja::read_json(tmp("rt.json")));
  EXPECT_EQ(ja::heatmap_json(back).dump(), ja::heatmap_json(t).dump());
  EXPECT_EQ(back.judges, (std::vector<std::string>{"judge-a", "judge-b"}));
  const auto first = ja::read_file(tmp("rt.csv"));
  ja::emit_heatmap(cells, {}, ja::Modality::chat, tmp("rt"));
  EXPECT_EQ(ja::read_file(tmp("rt.csv")), first);
}

TEST(Heatmap, IncompleteGridListsMissingCells) {
  auto cells = grid_2x3();
  cells.erase(cells.begin() + 4);
  try {
    ja::build_heatmap(cells, {}, ja::Modality::edit);
    FAIL();
  } catch (const ja::IncompleteGrid& e) {
    EXPECT_EQ(e.missing(), (std::vector<std::string>{"judge-b/Error handling, strict"}));
  }
  EXPECT_THROW(ja::build_heatmap({}, {}, ja::Modality::edit), ja::IncompleteGrid);
}

TEST(AccuracyTable, FormattingAndShape) {
  ja::AccuracyRow r;
  r.judge = "judge-a";
  r.modality = ja::Modality::completion;
  r.summary = ja::summarize_counts(1000, 556, 378, 378);  // 37.80 / 67.99 / 55.60
  std::vector rows{r};
  ja::emit_accuracy_table(rows, tmp("acc"));
  const auto lines = ja::text::split_lines(ja::read_file(tmp("acc.csv")));
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], ja::kAccuracyHeader);
  EXPECT_EQ(lines[1], "judge-a,completion,37.80,67.99,55.60,,");

  ja::ContextSplit split;
  split.acc_fits = 0.4222;
  split.acc_truncated = 0.1901;
  rows[0].split = split;
  rows[0].summary = ja::summarize_counts(3, 0, 0, 0);
  EXPECT_EQ(ja::text::split_lines(ja::accuracy_csv(rows))[1], "judge-a,completion,0.00,,0.00,42.22,19.01");
  EXPECT_TRUE(ja::accuracy_json(rows)[0]["acc_pc"].is_null());
  EXPECT_THROW(ja::emit_accuracy_table({}, tmp("none")), ja::PreconditionError);
}
