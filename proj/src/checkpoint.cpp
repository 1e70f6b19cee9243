#include <fstream>
#include <sstream>

#include "ocgl/error.hpp"
#include "ocgl/model.hpp"

namespace ocgl {

namespace fs = std::filesystem;

namespace {

fs::path with_suffix(const fs::path& prefix, const char* suffix) {
  fs::path p = prefix;
  p += suffix;
  return p;
}

}  // namespace

void save_checkpoint(const Model& model, const fs::path& prefix) {
  const fs::path blob_path = with_suffix(prefix, ".bin");
  const fs::path manifest_path = with_suffix(prefix, ".manifest");
  std::ofstream blob(blob_path, std::ios::binary | std::ios::trunc);
  std::ofstream manifest(manifest_path, std::ios::trunc);
  if (!blob || !manifest) fail(ErrorKind::io, prefix.string() + ": cannot open checkpoint files for writing");

  const auto& s = model.shape;
  manifest << "ocgl-checkpoint 1\n";
  manifest << "shape " << s.input_dim << ' ' << s.hidden_dim << ' ' << s.output_capacity << ' ' << s.layers << ' '
           << (s.bias ? 1 : 0) << '\n';
  std::size_t offset = 0;
  for (const auto& p : model.params) {
    manifest << "tensor " << p.name << ' ' << p.value.rows() << ' ' << p.value.cols() << ' ' << offset << '\n';
    const auto bytes = p.value.size() * sizeof(double);
    blob.write(reinterpret_cast<const char*>(p.value.values().data()), static_cast<std::streamsize>(bytes));
    offset += bytes;
  }
  for (std::size_t c = 0; c < model.head.active_count(); ++c) manifest << "head " << model.head.label_of(c) << '\n';
  if (!blob || !manifest) fail(ErrorKind::io, prefix.string() + ": checkpoint write failed");
}

Model load_checkpoint(const fs::path& prefix) {
  const fs::path blob_path = with_suffix(prefix, ".bin");
  const fs::path manifest_path = with_suffix(prefix, ".manifest");
  std::ifstream manifest(manifest_path);
  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob || !manifest) fail(ErrorKind::format, prefix.string() + ": cannot open checkpoint files");

  std::string line;
  std::getline(manifest, line);
  require(line == "ocgl-checkpoint 1", ErrorKind::format, manifest_path.string() + ": bad header");

  Model model;
  while (std::getline(manifest, line)) {
    std::istringstream in(line);
    std::string tag;
    in >> tag;
    if (tag == "shape") {
      int bias = 0;
      in >> model.shape.input_dim >> model.shape.hidden_dim >> model.shape.output_capacity >> model.shape.layers >>
          bias;
      model.shape.bias = bias != 0;
      model.head = OutputHead(model.shape.output_capacity);
    } else if (tag == "tensor") {
      std::string name;
      std::size_t rows = 0, cols = 0, offset = 0;
      in >> name >> rows >> cols >> offset;
      require(static_cast<bool>(in), ErrorKind::format, manifest_path.string() + ": malformed tensor line");
      std::vector<double> values(rows * cols);
      blob.seekg(static_cast<std::streamoff>(offset));
      blob.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
      require(static_cast<bool>(blob), ErrorKind::format,
              blob_path.string() + " @ byte " + std::to_string(offset) + ": truncated tensor " + name);
      model.params.add(name, DenseMatrix(rows, cols, std::move(values)));
    } else if (tag == "head") {
      int label = 0;
      in >> label;
      model.head.activate(label);
    } else if (!tag.empty()) {
      fail(ErrorKind::format, manifest_path.string() + ": unknown entry " + tag);
    }
  }
  return model;
}

}  // namespace ocgl
