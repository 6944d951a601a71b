#include "jointud/checkpoint.hpp"

#include <fstream>

#include "jointud/binary_io.hpp"

namespace jointud {

namespace {

void write_list(std::ostream& out, const std::vector<std::string>& items) {
  binary::write<uint32_t>(out, static_cast<uint32_t>(items.size()));
  for (const auto& s : items) binary::write_string(out, s);
}

std::vector<std::string> read_list(std::istream& in, const char* what) {
  const uint32_t n = binary::read<uint32_t>(in, what);
  std::vector<std::string> items;
  items.reserve(n);
  for (uint32_t i = 0; i < n; ++i) items.push_back(binary::read_string(in, what));
  return items;
}

}  // namespace

void save_checkpoint(std::ostream& out, const JointModel<float>& model) {
  out.write("JUDM", 4);
  binary::write<uint32_t>(out, kCheckpointVersion);
  binary::write_string(out, model.config().to_text());
  const ModelLabels& labels = model.labels();
  write_list(out, labels.upos.names());
  write_list(out, labels.xpos.names());
  write_list(out, labels.feats.names());
  write_list(out, labels.deprel.names());
  std::vector<std::string> scripts;
  for (int i = 0; i < labels.lemmas.size(); ++i) scripts.push_back(labels.lemmas.encoded(i));
  write_list(out, scripts);
  binary::write<uint32_t>(out, labels.lemmas_annotated ? 1 : 0);
  write_list(out, model.words().tokens());
  write_list(out, model.chars().tokens());
  const auto& params = model.params();
  binary::write<uint32_t>(out, static_cast<uint32_t>(params.size()));
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& e = params.entry(i);
    binary::write_string(out, e.name);
    binary::write<uint32_t>(out, static_cast<uint32_t>(e.param.value.rows()));
    binary::write<uint32_t>(out, static_cast<uint32_t>(e.param.value.cols()));
    binary::write_floats(out, e.param.value.data(), static_cast<size_t>(e.param.value.size()));
  }
}

std::unique_ptr<JointModel<float>> load_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != "JUDM")
    throw binary::FormatError("not a model checkpoint (bad magic)");
  const auto version = binary::read<uint32_t>(in, "version");
  if (version != kCheckpointVersion)
    throw binary::FormatError("unsupported checkpoint version " + std::to_string(version));
  ModelConfig config = ModelConfig::from_text(binary::read_string(in, "config"));
  ModelLabels labels;
  labels.upos = LabelSet::from_names(read_list(in, "UPOS labels"));
  labels.xpos = LabelSet::from_names(read_list(in, "XPOS labels"));
  labels.feats = LabelSet::from_names(read_list(in, "FEATS labels"));
  labels.deprel = LabelSet::from_names(read_list(in, "DEPREL labels"));
  labels.lemmas = ScriptInventory::from_encodings(read_list(in, "lemma scripts"));
  labels.lemmas_annotated = binary::read<uint32_t>(in, "lemma flag") != 0;
  Vocab words = Vocab::from_tokens(read_list(in, "word vocabulary"));
  Vocab chars = Vocab::from_tokens(read_list(in, "character vocabulary"));
  auto model = std::make_unique<JointModel<float>>(std::move(config), std::move(labels), std::move(words), std::move(chars));
  auto& params = model->params();
  const auto count = binary::read<uint32_t>(in, "parameter count");
  if (count != params.size())
    throw binary::FormatError("checkpoint has " + std::to_string(count) + " parameters, model expects " +
                              std::to_string(params.size()));
  for (uint32_t i = 0; i < count; ++i) {
    auto& e = params.entry(i);
    const std::string name = binary::read_string(in, "parameter name");
    if (name != e.name) throw binary::FormatError("parameter " + std::to_string(i) + " is '" + name + "', expected '" + e.name + "'");
    const auto rows = binary::read<uint32_t>(in, "rows");
    const auto cols = binary::read<uint32_t>(in, "cols");
    if (rows != e.param.value.rows() || cols != e.param.value.cols())
      throw binary::FormatError("parameter '" + name + "' has shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                                ", expected " + Graph<float>::shape_string(e.param.value));
    binary::read_floats(in, e.param.value.data(), static_cast<size_t>(e.param.value.size()), name.c_str());
  }
  if (in.peek() != std::char_traits<char>::eof()) throw binary::FormatError("trailing bytes after checkpoint");
  return model;
}

void save_checkpoint_file(const std::string& path, const JointModel<float>& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  save_checkpoint(out, model);
  if (!out) throw std::runtime_error("error writing " + path);
}

std::unique_ptr<JointModel<float>> load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model " + path);
  try {
    return load_checkpoint(in);
  } catch (const binary::FormatError& e) {
    throw binary::FormatError(path + ": " + e.what());
  }
}

}  // namespace jointud
