# Copyright (c) 2024 The mocopy developers
# For license information see LICENSE or https://opensource.org/licenses/BSD-3-Clause

"""Generate the code reference pages: one page per sub-package, plus the modules a sub-package does not re-export."""

from pathlib import Path

import mkdocs_gen_files

PACKAGE = Path("mocopy")

# Modules kept out of their package namespace; they are imported by module path.
STANDALONE = {("mocopy", "numerics", "ops")}

nav = mkdocs_gen_files.Nav()


def write_page(parts, source):
    doc_path = Path(*parts[1:], "index.md") if len(parts) > 1 else Path("index.md")
    if parts in STANDALONE:
        doc_path = Path(*parts[1:]).with_suffix(".md")
    nav[parts] = doc_path.as_posix()
    full_doc_path = Path("reference", doc_path)
    with mkdocs_gen_files.open(full_doc_path, "w") as fd:
        print("::: " + ".".join(parts), file=fd)
    mkdocs_gen_files.set_edit_path(full_doc_path, Path("../") / source)


for init in sorted(PACKAGE.rglob("__init__.py")):
    write_page(init.parent.parts, init)

for parts in sorted(STANDALONE):
    write_page(parts, Path(*parts).with_suffix(".py"))

with mkdocs_gen_files.open("reference/SUMMARY.md", "w") as nav_file:
    nav_file.writelines(nav.build_literate_nav())
