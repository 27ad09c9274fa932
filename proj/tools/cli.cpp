#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "stegopivot/bins.hpp"
#include "stegopivot/codec.hpp"
#include "stegopivot/errors.hpp"
#include "stegopivot/lm.hpp"
#include "stegopivot/metrics.hpp"
#include "stegopivot/remote.hpp"
#include "stegopivot/synonyms.hpp"
#include "stegopivot/tokenizer.hpp"
#include "stegopivot/toy_corpus.hpp"

namespace stegopivot::cli {
namespace {

using nlohmann::json;

// Bad flag combinations detected after parsing; exit code 2 like CLI11's own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string bpe, bins, synsets, corpus, in, out, payload, key;
  std::string step = "3";
  unsigned bits = 1;
  std::string scheme = "sabins";
  std::string framing = "header32";
  std::string declared_bits;
  std::size_t max_tokens = 256;
  std::string provider;
  bool word_level = false;
  std::size_t merges = 8000;
  std::size_t common = 1000;
  std::size_t lines = 10000;
};

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("stegopivot", sink);
  logger->set_pattern("[%l] %v");
  auto level = spdlog::level::warn;
  if (const char* env = std::getenv("STEGOPIVOT_LOG"); env && *env) level = spdlog::level::from_str(env);
  logger->set_level(level);
  return logger;
}

void require(const std::string& value, std::string_view flag, std::string_view why) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required " + std::string(why));
}

std::optional<unsigned> parse_step(const std::string& text) {
  if (text == "inf") return std::nullopt;
  std::size_t used = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || v < 1 || v > 1000000) throw UsageError("--step must be a positive integer or 'inf'");
  return static_cast<unsigned>(v);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

std::unique_ptr<DistributionProvider> make_provider(const std::string& spec, const BpeModel& bpe,
                                                    spdlog::logger& log) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw UsageError("--provider must be ngram:<path> or remote:<host:port>");
  const std::string kind = spec.substr(0, colon);
  std::vector<std::string> parts;
  {
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
  }
  if (parts.empty() || parts[0].empty()) throw UsageError("--provider needs a path or address");
  auto option = [&](const std::string& name) -> std::optional<std::string> {
    for (std::size_t i = 1; i < parts.size(); ++i) {
      if (parts[i].rfind(name + "=", 0) == 0) return parts[i].substr(name.size() + 1);
    }
    return std::nullopt;
  };
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const auto key = parts[i].substr(0, parts[i].find('='));
    if (key != "order" && key != "k" && key != "sparse") throw UsageError("unknown provider option '" + key + "'");
  }

  if (kind == "ngram") {
    NgramOptions opts;
    try {
      if (auto v = option("order")) opts.order = static_cast<unsigned>(std::stoul(*v));
      if (auto v = option("k")) opts.add_k = std::stod(*v);
    } catch (const std::exception&) {
      throw UsageError("bad n-gram provider option in '" + spec + "'");
    }
    if (opts.order < 1 || opts.order > 5 || !(opts.add_k > 0)) throw UsageError("n-gram needs order 1..5 and k > 0");
    log.info("training {}-gram (k={}) on {}", opts.order, opts.add_k, parts[0]);
    return std::make_unique<NgramProvider>(train_ngram(bpe, read_lines(parts[0]), opts));
  }
  if (kind == "remote") {
    RemoteOptions opts;
    opts.expected_vocab_size = bpe.size();
    opts.expected_vocab_hash = bpe.vocab_hash();
    if (auto v = option("sparse")) {
      opts.mode = SparseMode::Sparse;
      opts.top_k = std::stoul(*v);
    }
    return std::make_unique<RemoteProvider>(parse_bridge_address(parts[0]), opts);
  }
  throw UsageError("unknown provider kind '" + kind + "'");
}

StegoParams make_params(const Flags& f) {
  StegoParams p;
  p.step = parse_step(f.step);
  p.bits_per_token = p.step ? f.bits : 0;
  if (p.step && f.bits < 1) throw UsageError("--bits must be >= 1 unless --step inf");
  try {
    p.framing = parse_framing(f.framing);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  p.max_tokens = f.max_tokens;
  if (!f.key.empty()) p.key = SecretKey::from_passphrase(f.key);
  return p;
}

std::vector<std::size_t> parse_declared(const std::string& text, std::size_t count) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoul(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--declared-bits must be an integer or a comma-separated list");
    }
  }
  if (out.size() != count)
    throw UsageError("--declared-bits lists " + std::to_string(out.size()) + " lengths for " +
                     std::to_string(count) + " texts");
  return out;
}

// --- subcommands -------------------------------------------------------------

int cmd_toy_corpus(const Flags& f, std::ostream& out, spdlog::logger& log) {
  write_file(f.out, join_lines(toy_corpus(f.lines)));
  if (!f.synsets.empty()) write_file(f.synsets, toy_synsets());
  log.info("wrote {} toy lines", f.lines);
  out << "lines=" << f.lines << "\n";
  return kExitOk;
}

int cmd_bpe_train(const Flags& f, std::ostream& out, spdlog::logger& log) {
  BpeTrainOptions opts;
  if (f.word_level) opts.segmentation = Segmentation::Word;
  const auto model = train_bpe(read_lines(f.corpus), f.merges, opts);
  if (!f.word_level && model.merges().size() < f.merges)
    log.warn("learned {} of {} requested merges: every word is already a single symbol", model.merges().size(),
             f.merges);
  model.save_file(f.out);
  out << "merges=" << model.merges().size() << " vocab=" << model.size() << "\n";
  return kExitOk;
}

int cmd_bins_build(const Flags& f, std::ostream& out, spdlog::logger& log) {
  BinScheme scheme;
  try {
    scheme = parse_scheme(f.scheme);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (scheme != BinScheme::Bins) require(f.corpus, "--corpus", "for token frequencies");
  const auto bpe = BpeModel::load_file(f.bpe);
  const auto key = SecretKey::from_passphrase(f.key);
  FrequencyTable freqs;
  if (!f.corpus.empty()) freqs = count_frequencies(bpe, read_lines(f.corpus));

  std::optional<BinAssignment> bins;
  switch (scheme) {
    case BinScheme::SaBins: {
      SynonymDB db = f.synsets.empty() ? SynonymDB{} : load_synsets(f.synsets);
      if (f.synsets.empty()) log.warn("no --synsets given: every substitution set is a singleton");
      bins = build_sabins(bpe, freqs, db, f.bits, key);
      break;
    }
    case BinScheme::Bins:
      bins = build_bins_random(bpe, f.bits, key);
      break;
    case BinScheme::BinsCommon:
      bins = build_bins_common(bpe, freqs, f.bits, key, f.common);
      break;
  }
  bins->save_file(f.out);
  out << "scheme=" << scheme_name(scheme) << " l=" << f.bits << " fingerprint=" << bins->key_fingerprint() << "\n";
  return kExitOk;
}

int cmd_embed(const Flags& f, std::ostream& out, spdlog::logger& log) {
  const auto params = make_params(f);
  if (!params.zero_bit()) {
    require(f.bins, "--bins", "unless --step inf");
    require(f.key, "--key", "unless --step inf");
  }
  const auto bpe = BpeModel::load_file(f.bpe);
  const auto covers = read_lines(f.in);
  if (covers.empty()) throw Error(ErrorCode::EmptyInput, f.in + " has no lines");
  Bits payload;
  if (!f.payload.empty()) {
    const auto raw = read_file(f.payload);
    payload = bytes_to_bits({reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()});
  }
  if (params.zero_bit() && !payload.empty()) throw UsageError("--step inf carries no payload; drop --payload");

  std::optional<BinAssignment> bins;
  if (!params.zero_bit()) bins = BinAssignment::load_file(f.bins);
  auto provider = make_provider(f.provider, bpe, log);

  json texts = json::array();
  std::vector<std::string> surfaces;
  std::size_t total_embedded = 0;
  const std::size_t n = covers.size();
  for (std::size_t i = 0; i < n; ++i) {
    // Even split of the payload over the texts.
    const std::size_t begin = payload.size() * i / n;
    const std::size_t end = payload.size() * (i + 1) / n;
    const Bits chunk(payload.begin() + static_cast<std::ptrdiff_t>(begin),
                     payload.begin() + static_cast<std::ptrdiff_t>(end));
    StegoText st;
    if (payload.empty() || (params.framing == Framing::Raw && chunk.empty())) {
      st = generate_zero_bit(covers[i], *provider, bpe, params.max_tokens);
    } else {
      try {
        st = embed(covers[i], chunk, params, *bins, *provider, bpe);
      } catch (const Error& e) {
        throw Error(e.code(), "text " + std::to_string(i) + ": " + e.what());
      }
    }
    if (st.truncated) log.warn("text {} hit --max-tokens; <eos> appended", i);
    total_embedded += st.embedded_bit_count;
    surfaces.push_back(st.surface);
    texts.push_back({{"index", i},
                     {"bit_offset", begin},
                     {"bit_count", end - begin},
                     {"framed_bits", st.framed_bit_count},
                     {"embedded_bits", st.embedded_bit_count},
                     {"carrying_positions", st.carrying_positions},
                     {"stego_tokens", st.tokens.size() - 1},
                     {"truncated", st.truncated}});
  }
  json manifest = {{"version", 1},
                   {"step", params.step ? json(*params.step) : json("inf")},
                   {"bits", params.bits_per_token},
                   {"framing", framing_name(params.framing)},
                   {"scheme", bins ? json(scheme_name(bins->scheme())) : json(nullptr)},
                   {"key_fingerprint", bins ? json(bins->key_fingerprint()) : json(nullptr)},
                   {"payload_bits", payload.size()},
                   {"embedded_bits", total_embedded},
                   {"texts", texts}};
  write_file(f.out, join_lines(surfaces));
  write_file(f.out + ".manifest.json", manifest.dump(2) + "\n");
  log.info("embedded {} payload bits into {} texts", payload.size(), n);
  out << "texts=" << n << " payload_bits=" << payload.size() << " embedded_bits=" << total_embedded << "\n";
  return kExitOk;
}

int cmd_extract(const Flags& f, std::ostream& out, spdlog::logger& log) {
  const auto params = make_params(f);
  if (!params.zero_bit()) require(f.bins, "--bins", "unless --step inf");
  const auto bpe = BpeModel::load_file(f.bpe);
  const auto texts = read_lines(f.in);
  if (texts.empty()) throw Error(ErrorCode::EmptyInput, f.in + " has no lines");
  std::vector<std::optional<std::size_t>> declared(texts.size());
  if (!f.declared_bits.empty()) {
    const auto lengths = parse_declared(f.declared_bits, texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) declared[i] = lengths[i];
  } else if (params.framing == Framing::Raw) {
    throw Error(ErrorCode::MissingLength, "raw framing needs --declared-bits");
  }
  std::optional<BinAssignment> bins;
  if (!params.zero_bit()) bins = BinAssignment::load_file(f.bins);

  Bits all;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (declared[i] && *declared[i] == 0 && params.framing == Framing::Raw) continue;
    if (params.zero_bit()) continue;
    try {
      const auto bits = extract(texts[i], params, *bins, bpe, declared[i]);
      all.insert(all.end(), bits.begin(), bits.end());
    } catch (const Error& e) {
      throw Error(e.code(), "text " + std::to_string(i) + ": " + e.what());
    }
  }
  if (all.size() % 8 != 0)
    throw Error(ErrorCode::TruncatedPayload, "recovered " + std::to_string(all.size()) + " bits, not whole bytes");
  const auto bytes = bits_to_bytes(all);
  write_file(f.out, std::string(bytes.begin(), bytes.end()));
  log.info("recovered {} bits from {} texts", all.size(), texts.size());
  out << "bits=" << all.size() << "\n";
  return kExitOk;
}

int cmd_eval(const Flags& f, std::ostream& out, spdlog::logger& log) {
  const auto bpe = BpeModel::load_file(f.bpe);
  const auto covers = read_lines(f.corpus);
  const auto stegos = read_lines(f.in);
  if (covers.size() != stegos.size())
    throw Error(ErrorCode::ParamMismatch, "cover and stego files differ in line count");
  std::optional<StegoParams> params;
  std::optional<BinAssignment> bins;
  std::vector<std::optional<std::size_t>> declared(stegos.size());
  if (!f.bins.empty()) {
    params = make_params(f);
    if (params->zero_bit()) throw UsageError("--bins with --step inf has nothing to count");
    bins = BinAssignment::load_file(f.bins);
    if (!f.declared_bits.empty()) {
      const auto lengths = parse_declared(f.declared_bits, stegos.size());
      for (std::size_t i = 0; i < stegos.size(); ++i) declared[i] = lengths[i];
    }
  }
  auto provider = make_provider(f.provider, bpe, log);
  std::vector<EvalRow> rows;
  for (std::size_t i = 0; i < stegos.size(); ++i) {
    std::size_t embedded = 0;
    if (bins) {
      // Re-extract, then count whole carrying frames.
      const auto l = params->bits_per_token;
      std::size_t framed = 0;
      if (!(declared[i] && *declared[i] == 0 && params->framing == Framing::Raw)) {
        framed = frame_payload(extract(stegos[i], *params, *bins, bpe, declared[i]), params->framing, l).size();
      }
      embedded = (framed + l - 1) / l * l;
    }
    rows.push_back(evaluate_pair(covers[i], stegos[i], embedded, *provider, bpe));
  }
  std::ostringstream report;
  write_eval_report(report, rows);
  if (f.out.empty()) {
    out << report.str();
  } else {
    write_file(f.out, report.str());
    out << "rows=" << rows.size() << "\n";
  }
  return kExitOk;
}

int cmd_bridge_check(const Flags& f, std::ostream& out, spdlog::logger&) {
  if (f.provider.rfind("remote:", 0) != 0) throw UsageError("--provider must be remote:<host:port>");
  RemoteOptions opts;
  if (!f.bpe.empty()) {
    const auto bpe = BpeModel::load_file(f.bpe);
    opts.expected_vocab_size = bpe.size();
    opts.expected_vocab_hash = bpe.vocab_hash();
  }
  RemoteProvider remote(parse_bridge_address(f.provider.substr(7)), opts);
  GenerationContext ctx{"bridge check", {}};
  const auto dist = remote.dense_distribution(ctx);
  double sum = 0.0;
  for (double p : dist.probs) sum += p;
  if (dist.size() != remote.vocab_size() || std::abs(sum - 1.0) > 1e-6)
    throw Error(ErrorCode::ProtocolError, "distribution of length " + std::to_string(dist.size()) + " sums to " +
                                              std::to_string(sum));
  out << "vocab_size=" << remote.vocab_size() << "\n";
  out << "vocab_hash=" << remote.hello().vocab_hash << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Linguistic steganography codec with SaBins bins coding", "stegopivot"};
  app.require_subcommand(1);

  auto* toy = app.add_subcommand("toy-corpus", "Write the synthetic toy corpus (and optionally its synsets)");
  toy->add_option("--out", f.out, "Corpus output path")->required();
  toy->add_option("--synsets", f.synsets, "Also write synonym sets here");
  toy->add_option("--lines", f.lines, "Number of lines")->check(CLI::PositiveNumber);

  auto* train = app.add_subcommand("bpe-train", "Train a BPE model");
  train->add_option("--corpus", f.corpus, "Training text, one sentence per line")->required()->check(CLI::ExistingFile);
  train->add_option("--out", f.out, "Model output path")->required();
  train->add_option("--merges", f.merges, "Number of merge rules to learn");
  train->add_flag("--word-level", f.word_level, "Whole-word tokens, no merges");

  auto* build = app.add_subcommand("bins-build", "Build the token-to-bits mapping");
  build->add_option("--bpe", f.bpe, "BPE model")->required()->check(CLI::ExistingFile);
  build->add_option("--corpus", f.corpus, "Corpus for token frequencies")->check(CLI::ExistingFile);
  build->add_option("--synsets", f.synsets, "Synonym sets (sabins)")->check(CLI::ExistingFile);
  build->add_option("--key", f.key, "Secret passphrase")->required();
  build->add_option("--bits", f.bits, "Bits per stego token (l)")->required()->check(CLI::Range(1, 30));
  build->add_option("--scheme", f.scheme, "sabins | bins | bins-common")
      ->check(CLI::IsMember({"sabins", "bins", "bins-common"}));
  build->add_option("--common", f.common, "Common-token count for bins-common");
  build->add_option("--out", f.out, "Bins file output path")->required();

  auto add_codec = [&](CLI::App* sub) {
    sub->add_option("--bpe", f.bpe, "BPE model")->required()->check(CLI::ExistingFile);
    sub->add_option("--bins", f.bins, "Bins file")->check(CLI::ExistingFile);
    sub->add_option("--key", f.key, "Secret passphrase (checked against the bins fingerprint)");
    sub->add_option("--step", f.step, "Step s, or 'inf' for zero-bit output");
    sub->add_option("--bits", f.bits, "Bits per stego token (l)");
    sub->add_option("--framing", f.framing, "header32 | raw")->check(CLI::IsMember({"header32", "raw"}));
  };

  auto* emb = app.add_subcommand("embed", "Hide a payload in generated texts, one per cover line");
  add_codec(emb);
  emb->add_option("--in", f.in, "Cover texts, one per line")->required()->check(CLI::ExistingFile);
  emb->add_option("--payload", f.payload, "Payload file (bytes); omit for zero-bit output")->check(CLI::ExistingFile);
  emb->add_option("--out", f.out, "Stego output; the manifest goes to <out>.manifest.json")->required();
  emb->add_option("--max-tokens", f.max_tokens, "Generation cap per text")->check(CLI::PositiveNumber);
  emb->add_option("--provider", f.provider, "ngram:<corpus>[,order=N,k=X] or remote:<host:port>")->required();

  auto* ext = app.add_subcommand("extract", "Recover the payload from stego texts");
  add_codec(ext);
  ext->add_option("--in", f.in, "Stego texts, one per line")->required()->check(CLI::ExistingFile);
  ext->add_option("--out", f.out, "Recovered payload path")->required();
  ext->add_option("--declared-bits", f.declared_bits, "Raw framing: payload bits per text, comma-separated");

  auto* ev = app.add_subcommand("eval", "BPW, BLEU and PPL per text");
  ev->add_option("--bpe", f.bpe, "BPE model")->required()->check(CLI::ExistingFile);
  ev->add_option("--corpus", f.corpus, "Cover texts, one per line")->required()->check(CLI::ExistingFile);
  ev->add_option("--in", f.in, "Stego texts, one per line")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", f.out, "Report path (default: stdout)");
  ev->add_option("--provider", f.provider, "Model for PPL")->required();
  ev->add_option("--bins", f.bins, "Bins file, to count embedded bits")->check(CLI::ExistingFile);
  ev->add_option("--key", f.key, "Secret passphrase");
  ev->add_option("--step", f.step, "Step s");
  ev->add_option("--bits", f.bits, "Bits per stego token (l)");
  ev->add_option("--framing", f.framing, "header32 | raw")->check(CLI::IsMember({"header32", "raw"}));
  ev->add_option("--declared-bits", f.declared_bits, "Raw framing: payload bits per text");

  auto* bridge = app.add_subcommand("bridge-check", "Handshake with a bridge server and sanity-check one distribution");
  bridge->add_option("--provider", f.provider, "remote:<host:port>")->required();
  bridge->add_option("--bpe", f.bpe, "BPE model whose vocabulary must match")->check(CLI::ExistingFile);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  auto logger = make_logger(err);
  try {
    if (toy->parsed()) return cmd_toy_corpus(f, out, *logger);
    if (train->parsed()) return cmd_bpe_train(f, out, *logger);
    if (build->parsed()) return cmd_bins_build(f, out, *logger);
    if (emb->parsed()) return cmd_embed(f, out, *logger);
    if (ext->parsed()) return cmd_extract(f, out, *logger);
    if (ev->parsed()) return cmd_eval(f, out, *logger);
    if (bridge->parsed()) return cmd_bridge_check(f, out, *logger);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace stegopivot::cli
