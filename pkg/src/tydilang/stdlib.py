"""Built-in template prelude, auto-imported into every package.

The sugaring pass depends on these two component families: duplicators to
fan a stream out to N acknowledged sinks, and voiders to complete the
handshake of outputs nobody reads.
"""

from __future__ import annotations

PRELUDE_PACKAGE = "tydi_std"
PRELUDE_PATH = "<builtin>/tydi_std.td"

PRELUDE_SOURCE = """\
package tydi_std;

//duplicate one stream to N outputs, acknowledging upstream only when all
//sinks acknowledged
streamlet duplicator_s<data_type: type, output_channel: int> {
  input: data_type in,
  output: data_type [output_channel] out,
};

external impl duplicator_i<data_type: type, output_channel: int> of duplicator_s<type data_type, output_channel> {
};

//accept and discard packets so an unused output never blocks
streamlet void_s<type_in: type> {
  input: type_in in,
};

external impl void_i<type_in: type> of void_s<type type_in> {
};
"""
