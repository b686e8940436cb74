#include "conceptflow/commands.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace conceptflow;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig chain_config() {
  RunConfig cfg;
  cfg.triples = cftest::data_path("chain_kg.tsv");
  cfg.conversations = cftest::data_path("chain_corpus.jsonl");
  cfg.max_depth = 2;
  cfg.word_dim = 16;
  cfg.concept_dim = 16;
  cfg.hidden = 16;
  cfg.layers = 1;
  cfg.transe_epochs = 10;
  return cfg;
}

}  // namespace

TEST(Config, FileParsingAndOverridePrecedence) {
  std::string path = cftest::write_temp_file(
      "run.conf",
      "# comment line\n"
      "triples = a.tsv\n"
      "hidden = 64\n"
      "lr = 0.01\n"
      "\n"
      "decode_mode = top_k\n");
  RunConfig cfg;
  load_config_file(cfg, path);
  EXPECT_EQ(cfg.triples, "a.tsv");
  EXPECT_EQ(cfg.hidden, 64);
  EXPECT_DOUBLE_EQ(cfg.lr, 0.01);
  EXPECT_EQ(cfg.decode_mode, "top_k");

  apply_config_entry(cfg, "hidden", "32");  // flag beats file
  EXPECT_EQ(cfg.hidden, 32);
  EXPECT_EQ(cfg.epochs, 20);  // untouched default

  EXPECT_THROW(apply_config_entry(cfg, "no_such_key", "1"), UsageError);
  EXPECT_THROW(apply_config_entry(cfg, "hidden", "abc"), UsageError);
  EXPECT_THROW(load_config_file(cfg, "missing.conf"), DataError);

  std::string bad = cftest::write_temp_file("bad.conf", "hidden 32\n");
  EXPECT_THROW(load_config_file(cfg, bad), ParseError);
}

TEST(Config, Validation) {
  RunConfig cfg;
  validate_config(cfg);  // defaults are valid
  RunConfig bad_dim = cfg;
  bad_dim.hidden = 0;
  EXPECT_THROW(validate_config(bad_dim), UsageError);
  RunConfig bad_mode = cfg;
  bad_mode.decode_mode = "beam";
  EXPECT_THROW(validate_config(bad_mode), UsageError);
  RunConfig bad_fraction = cfg;
  bad_fraction.select_fraction = 0.0;
  EXPECT_THROW(validate_config(bad_fraction), UsageError);
}

TEST(Checkpoint, RoundTripReproducesForwardBitwise) {
  RunConfig cfg = chain_config();
  Corpus corpus = load_corpus(cfg);
  ModelParams original = build_model(cfg, corpus);
  std::string path = cftest::write_temp_file("model.ckpt", "");
  save_checkpoint(path, original, 7);

  RunConfig other_seed = cfg;
  other_seed.seed = 99;
  other_seed.transe_epochs = 0;
  ModelParams restored = build_model(other_seed, corpus);
  uint64_t step = load_checkpoint(path, restored);
  EXPECT_EQ(step, 7u);

  const PreparedExample& example = corpus.examples[0];
  EncodedExample a, b;
  encode_example(nullptr, original, example, 0.5, a);
  encode_example(nullptr, restored, example, 0.5, b);
  double loss_a = training_loss(nullptr, original, a.ctx, example.targets).value();
  double loss_b = training_loss(nullptr, restored, b.ctx, example.targets).value();
  EXPECT_EQ(loss_a, loss_b);  // bitwise

  // Fingerprint mismatch: different hidden size refuses to load.
  RunConfig bigger = cfg;
  bigger.hidden = 24;
  ModelParams wrong = build_model(bigger, corpus);
  EXPECT_THROW(load_checkpoint(path, wrong), DataError);
  EXPECT_THROW(load_checkpoint("missing.ckpt", restored), DataError);

  // Truncated file is refused rather than partially loaded.
  std::string whole = slurp(path);
  std::string cut_path = "cf_test_tmp/truncated.ckpt";
  std::ofstream cut(cut_path, std::ios::binary);
  cut.write(whole.data(), static_cast<std::streamsize>(whole.size() / 2));
  cut.close();
  EXPECT_THROW(load_checkpoint(cut_path, restored), DataError);
}

TEST(CmdStats, ChainFixtureAndGuards) {
  RunConfig cfg = chain_config();
  std::ostringstream out;
  HopStats stats = cmd_stats(cfg, out);
  ASSERT_EQ(stats.rows.size(), 3u);
  EXPECT_DOUBLE_EQ(stats.rows[0].coverage_ratio, 0.0);
  EXPECT_DOUBLE_EQ(stats.rows[1].coverage_ratio, 0.5);
  EXPECT_DOUBLE_EQ(stats.rows[2].coverage_ratio, 1.0);
  EXPECT_NE(out.str().find("zero-hop"), std::string::npos);

  RunConfig empty = cfg;
  empty.conversations = cftest::write_temp_file("none.jsonl", "");
  std::ostringstream sink;
  EXPECT_THROW(cmd_stats(empty, sink), DataError);
}

TEST(CmdStats, WritesMachineReadableTable) {
  RunConfig cfg = chain_config();
  cfg.output = "cf_test_tmp/stats.json";
  std::ostringstream out;
  cmd_stats(cfg, out);
  std::ifstream in(cfg.output);
  ASSERT_TRUE(in.good());
  auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("examples").get<int>(), 1);
  EXPECT_DOUBLE_EQ(j.at("rows").at(1).at("ratio").get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j.at("rows").at(2).at("number").get<double>(), 2.0);
}

TEST(CmdTrain, SmokeAndSeedDeterminism) {
  RunConfig cfg = chain_config();
  cfg.epochs = 2;
  cfg.checkpoint = "cf_test_tmp/train_a.ckpt";
  std::ostringstream out_a;
  TrainLog log_a = cmd_train(cfg, TrainStage::main, out_a);
  ASSERT_EQ(log_a.epoch_mean_loss.size(), 2u);
  EXPECT_TRUE(std::isfinite(log_a.epoch_mean_loss.back()));
  EXPECT_TRUE(std::filesystem::exists(cfg.checkpoint));

  RunConfig cfg_b = cfg;
  cfg_b.checkpoint = "cf_test_tmp/train_b.ckpt";
  std::ostringstream out_b;
  TrainLog log_b = cmd_train(cfg_b, TrainStage::main, out_b);
  EXPECT_EQ(log_a.epoch_mean_loss.back(), log_b.epoch_mean_loss.back());
  EXPECT_EQ(slurp(cfg.checkpoint), slurp(cfg_b.checkpoint));

  // Pruning enabled but the file is missing.
  RunConfig pruned = cfg;
  pruned.pruned_graphs = "cf_test_tmp/does_not_exist.jsonl";
  std::ostringstream sink;
  EXPECT_THROW(cmd_train(pruned, TrainStage::main, sink), DataError);
}

TEST(CmdTrain, ResumeChecksFingerprint) {
  RunConfig cfg = chain_config();
  cfg.epochs = 1;
  cfg.checkpoint = "cf_test_tmp/resume.ckpt";
  std::filesystem::remove(cfg.checkpoint);
  std::ostringstream out;
  cmd_train(cfg, TrainStage::main, out);

  RunConfig changed = cfg;
  changed.hidden = 24;
  std::ostringstream sink;
  EXPECT_THROW(cmd_train(changed, TrainStage::main, sink), DataError);
}

TEST(CmdGenerate, OrderDeterminismAndMemorization) {
  RunConfig cfg = chain_config();
  cfg.epochs = 200;
  cfg.lr = 0.02;
  cfg.checkpoint = "cf_test_tmp/chain_overfit.ckpt";
  std::filesystem::remove(cfg.checkpoint);
  std::ostringstream train_out;
  cmd_train(cfg, TrainStage::main, train_out);

  std::string posts = cftest::write_temp_file("posts.txt", "lets chat\nsomething else\n");
  cfg.output = "cf_test_tmp/gen_a.jsonl";
  std::ostringstream out;
  cmd_generate(cfg, posts, out);
  std::ifstream gen(cfg.output);
  std::string line1, line2, line3;
  ASSERT_TRUE(std::getline(gen, line1));
  ASSERT_TRUE(std::getline(gen, line2));
  EXPECT_FALSE(std::getline(gen, line3));

  auto first = nlohmann::json::parse(line1);
  EXPECT_EQ(first.at("post").get<std::vector<std::string>>(),
            (std::vector<std::string>{"lets", "chat"}));
  EXPECT_EQ(first.at("response").get<std::vector<std::string>>(),
            (std::vector<std::string>{"we", "talk", "about", "dream"}));
  EXPECT_EQ(first.at("source_tags").get<std::vector<std::string>>(),
            (std::vector<std::string>{"word", "central", "word", "outer"}));

  cfg.output = "cf_test_tmp/gen_b.jsonl";
  std::ostringstream out_b;
  cmd_generate(cfg, posts, out_b);
  EXPECT_EQ(slurp("cf_test_tmp/gen_a.jsonl"), slurp("cf_test_tmp/gen_b.jsonl"));
}

TEST(CmdEvaluate, IdentityDisjointAndMisalignment) {
  RunConfig cfg = chain_config();
  std::string refs = cftest::write_temp_file(
      "refs.jsonl",
      "{\"post\":[\"lets\",\"chat\"],\"response\":[\"we\",\"talk\",\"about\",\"dream\"]}\n"
      "{\"post\":[\"hi\"],\"response\":[\"the\",\"future\",\"is\",\"here\"]}\n");
  std::string same = cftest::write_temp_file(
      "gen_same.jsonl",
      "{\"response\":[\"we\",\"talk\",\"about\",\"dream\"]}\n"
      "{\"response\":[\"the\",\"future\",\"is\",\"here\"]}\n");
  std::ostringstream out;
  metrics::EvalReport report = cmd_evaluate(cfg, same, refs, out);
  EXPECT_NEAR(report.get("bleu-4"), 1.0, 1e-12);
  EXPECT_NEAR(report.get("rouge-l-f1"), 1.0, 1e-12);
  EXPECT_NEAR(report.get("concept-f1"), 1.0, 1e-12);
  EXPECT_FALSE(report.has("ppl"));  // no checkpoint configured

  std::string disjoint = cftest::write_temp_file(
      "gen_disjoint.jsonl",
      "{\"response\":[\"xx\",\"yy\"]}\n"
      "{\"response\":[\"zz\",\"qq\"]}\n");
  std::ostringstream out2;
  metrics::EvalReport zero = cmd_evaluate(cfg, disjoint, refs, out2);
  EXPECT_DOUBLE_EQ(zero.get("bleu-1"), 0.0);

  std::string short_gen = cftest::write_temp_file(
      "gen_short.jsonl", "{\"response\":[\"we\"]}\n");
  std::ostringstream out3;
  EXPECT_THROW(cmd_evaluate(cfg, short_gen, refs, out3), DataError);
}

TEST(CmdEvaluate, WorkersMatchSequential) {
  RunConfig cfg = chain_config();
  std::string refs = cftest::write_temp_file(
      "refs_w.jsonl",
      "{\"post\":[\"lets\",\"chat\"],\"response\":[\"we\",\"talk\"]}\n"
      "{\"post\":[\"hi\"],\"response\":[\"a\",\"dream\"]}\n"
      "{\"post\":[\"yo\"],\"response\":[\"the\",\"talk\"]}\n");
  std::string gen = cftest::write_temp_file(
      "gen_w.jsonl",
      "{\"response\":[\"we\",\"dream\"]}\n"
      "{\"response\":[\"a\",\"dream\"]}\n"
      "{\"response\":[\"no\",\"match\"]}\n");
  std::ostringstream a, b;
  metrics::EvalReport seq = cmd_evaluate(cfg, gen, refs, a);
  RunConfig threaded = cfg;
  threaded.workers = 3;
  metrics::EvalReport par = cmd_evaluate(threaded, gen, refs, b);
  ASSERT_EQ(seq.values.size(), par.values.size());
  for (size_t i = 0; i < seq.values.size(); ++i) {
    EXPECT_EQ(seq.values[i].first, par.values[i].first);
    EXPECT_EQ(seq.values[i].second, par.values[i].second);  // bitwise
  }
}

TEST(Perplexity, UniformModelClosedForm) {
  // Word vocab of exactly 4 and all-zero parameters: every step costs
  // ln 3 (gate) + ln 4 (word), so perplexity is 12 per token.
  RunConfig cfg = chain_config();
  cfg.conversations = cftest::write_temp_file(
      "ppl_corpus.jsonl", "{\"post\":[\"a\"],\"response\":[\"a\",\"a\"]}\n");
  Corpus corpus = load_corpus(cfg);
  ASSERT_EQ(corpus.words.size(), 4);

  InitOptions zero;
  zero.scale = 0.0;
  zero.word_scale = 0.0;
  ModelParams params = init_model(dims_for_corpus(cfg, corpus), 1, zero);
  EXPECT_NEAR(perplexity(params, corpus), 12.0, 1e-9);
  // Worker parallelism must not change the value.
  EXPECT_EQ(perplexity(params, corpus, 0.5, 2), perplexity(params, corpus, 0.5, 1));
}

TEST(CmdTrain, HandlesPostsWithoutLinkedConcepts) {
  RunConfig cfg = chain_config();
  cfg.conversations = cftest::write_temp_file(
      "no_concepts.jsonl",
      "{\"post\":[\"nothing\",\"links\"],\"response\":[\"plain\",\"words\"]}\n"
      "{\"post\":[\"lets\",\"chat\"],\"response\":[\"we\",\"talk\"]}\n");
  cfg.epochs = 2;
  cfg.checkpoint = "cf_test_tmp/no_concepts.ckpt";
  std::filesystem::remove(cfg.checkpoint);
  std::ostringstream out;
  TrainLog log = cmd_train(cfg, TrainStage::main, out);
  EXPECT_TRUE(std::isfinite(log.epoch_mean_loss.back()));
  EXPECT_EQ(log.steps, 4u);
}

TEST(Perplexity, OverfitModelNearsOne) {
  RunConfig cfg = chain_config();
  Corpus corpus = load_corpus(cfg);
  ModelParams params = build_model(cfg, corpus);
  train_model(params, corpus, 0.02, 150, cfg.seed);
  EXPECT_LT(perplexity(params, corpus), 1.5);
}

TEST(CmdGenerate, TraceIncludesDecoderAndEncoderAttention) {
  RunConfig cfg = chain_config();
  cfg.epochs = 1;
  cfg.checkpoint = "cf_test_tmp/trace_model.ckpt";
  std::filesystem::remove(cfg.checkpoint);
  std::ostringstream train_out;
  cmd_train(cfg, TrainStage::main, train_out);

  cfg.trace = true;
  cfg.output = "cf_test_tmp/trace_gen.jsonl";
  std::string posts = cftest::write_temp_file("trace_posts.txt", "lets chat\n");
  std::ostringstream out;
  cmd_generate(cfg, posts, out);

  std::ifstream gen(cfg.output);
  std::string line;
  ASSERT_TRUE(std::getline(gen, line));
  auto record = nlohmann::json::parse(line);
  ASSERT_TRUE(record.contains("trace"));
  const auto& step = record.at("trace").at(0);
  EXPECT_TRUE(step.contains("gate_scores"));
  EXPECT_TRUE(step.contains("text_attention"));
  ASSERT_TRUE(record.contains("encoder_trace"));
  const auto& enc = record.at("encoder_trace");
  EXPECT_TRUE(enc.contains("pagerank"));
  EXPECT_TRUE(enc.contains("flow_attention"));
  // Layer-0 PageRank mass sits on the zero-hop concept.
  double total = 0.0;
  for (const auto& entry : enc.at("pagerank").at(0)) total += entry.at("score").get<double>();
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(PrunedGraphs, RoundTripAndAlignment) {
  std::vector<std::vector<int>> keep = {{3, 7}, {}, {1}};
  std::string path = "cf_test_tmp/pruned.jsonl";
  save_pruned_graphs(path, keep);
  EXPECT_EQ(load_pruned_graphs(path), keep);

  RunConfig cfg = chain_config();
  Corpus corpus = load_corpus(cfg);  // one example
  EXPECT_THROW(apply_pruning(corpus, path), DataError);

  std::string bad = cftest::write_temp_file("bad_pruned.jsonl", "{\"nope\":1}\n");
  EXPECT_THROW(load_pruned_graphs(bad), ParseError);
}

TEST(CmdSelect, ReuseWithoutCheckpointRefused) {
  RunConfig cfg = chain_config();
  cfg.pruned_graphs = "cf_test_tmp/sel_pruned.jsonl";
  cfg.reuse_select = true;
  cfg.select_checkpoint = "cf_test_tmp/no_such_select.ckpt";
  std::ostringstream out;
  EXPECT_THROW(cmd_select(cfg, out), DataError);
}

TEST(CmdSelect, WritesAlignedPrunedFile) {
  RunConfig cfg = chain_config();
  cfg.epochs = 3;
  cfg.k_top = 1;
  cfg.select_fraction = 1.0;
  cfg.pruned_graphs = "cf_test_tmp/sel_out.jsonl";
  cfg.select_checkpoint = "cf_test_tmp/sel_model.ckpt";
  std::ostringstream out;
  SelectStageResult result = cmd_select(cfg, out);
  EXPECT_EQ(result.keep_sets.size(), 1u);
  EXPECT_TRUE(std::filesystem::exists(cfg.pruned_graphs));
  EXPECT_TRUE(std::filesystem::exists(cfg.select_checkpoint));

  // Kept ids must form a valid pruning of the example's graph.
  Corpus corpus = load_corpus(cfg);
  apply_pruning(corpus, cfg.pruned_graphs);
  EXPECT_LE(corpus.examples[0].graph.two_hop.size(), 1u);
}
