// conceptflow: commonsense-graph grounded conversation generation.
//
// Usage: conceptflow <command> [--config file] [--<key> <value> ...]
// Commands: stats | select | train | generate | evaluate | chat

#include <iostream>
#include <string>
#include <vector>

#include "conceptflow/commands.hpp"

namespace {

constexpr const char* kUsage = R"(usage: conceptflow <command> [options]

commands:
  stats       per-hop concept graph size and golden coverage
  select      train the select model and write pruned two-hop graphs
  train       train a model stage (--stage main|select) and checkpoint it
  generate    decode responses for a file of posts (--input FILE)
  evaluate    score generated responses against references
              (--generated FILE --references FILE)
  chat        interactive decoding loop

options:
  --config FILE        flat key=value configuration file
  --<key> VALUE        override any config key (e.g. --lr 0.001 --epochs 50)
  --stage NAME         train: 'main' (default) or 'select'
  --input FILE         generate: one whitespace-tokenized post per line
  --generated FILE     evaluate: JSONL records with a 'response' array
  --references FILE    evaluate: conversation JSONL with golden responses

exit codes: 0 ok, 1 usage error, 2 data error, 3 numeric error
)";

struct CliArgs {
  std::string command;
  std::string config_path;
  std::string stage = "main";
  std::string input;
  std::string generated;
  std::string references;
  std::vector<std::pair<std::string, std::string>> overrides;
};

CliArgs parse_args(int argc, char** argv) {
  CliArgs args;
  if (argc < 2) throw conceptflow::UsageError("missing command");
  args.command = argv[1];
  for (int i = 2; i < argc; ++i) {
    std::string flag = argv[i];
    if (flag.rfind("--", 0) != 0)
      throw conceptflow::UsageError("unexpected argument '" + flag + "'");
    flag = flag.substr(2);
    std::string value;
    size_t eq = flag.find('=');
    if (eq != std::string::npos) {
      value = flag.substr(eq + 1);
      flag = flag.substr(0, eq);
    } else {
      if (i + 1 >= argc) throw conceptflow::UsageError("flag --" + flag + " needs a value");
      value = argv[++i];
    }
    for (char& c : flag)
      if (c == '-') c = '_';
    if (flag == "config") args.config_path = value;
    else if (flag == "stage") args.stage = value;
    else if (flag == "input") args.input = value;
    else if (flag == "generated") args.generated = value;
    else if (flag == "references") args.references = value;
    else args.overrides.emplace_back(flag, value);
  }
  return args;
}

int run(int argc, char** argv) {
  using namespace conceptflow;
  CliArgs args = parse_args(argc, argv);
  if (args.command == "help" || args.command == "--help" || args.command == "-h") {
    std::cout << kUsage;
    return 0;
  }

  RunConfig cfg;
  if (!args.config_path.empty()) load_config_file(cfg, args.config_path);
  for (const auto& [key, value] : args.overrides) apply_config_entry(cfg, key, value);
  validate_config(cfg);

  if (args.command == "stats") {
    cmd_stats(cfg, std::cout);
  } else if (args.command == "train") {
    if (args.stage != "main" && args.stage != "select")
      throw UsageError("--stage must be 'main' or 'select'");
    cmd_train(cfg, args.stage == "select" ? TrainStage::select : TrainStage::main, std::cout);
  } else if (args.command == "select") {
    cmd_select(cfg, std::cout);
  } else if (args.command == "generate") {
    if (args.input.empty()) throw UsageError("generate needs --input FILE");
    cmd_generate(cfg, args.input, std::cout);
  } else if (args.command == "evaluate") {
    if (args.generated.empty() || args.references.empty())
      throw UsageError("evaluate needs --generated FILE and --references FILE");
    cmd_evaluate(cfg, args.generated, args.references, std::cout);
  } else if (args.command == "chat") {
    cmd_chat(cfg, std::cin, std::cout);
  } else {
    throw UsageError("unknown command '" + args.command + "'");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const conceptflow::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << kUsage;
    return 1;
  } catch (const conceptflow::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
