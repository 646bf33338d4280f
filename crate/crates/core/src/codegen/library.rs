// SPDX-License-Identifier: Apache-2.0
//! Verilog bodies of the fundamental function library.
//!
//! Each module computes its result combinationally and pushes it through
//! `LATENCY` output registers, so a cost-table latency change only needs a
//! parameter at the instance.

use std::fmt::Write as _;

use super::VerilogFile;

/// Module names in library order.
pub const LIBRARY_MODULES: [&str; 12] = [
    "Addition_V",
    "Subtraction_V",
    "Multiplication_V",
    "Division_V",
    "Power_V",
    "Logarithm_V",
    "Sqrt_V",
    "SinCosTan_V",
    "Value_V",
    "Compare_V",
    "Merge_V",
    "Delay_V",
];

struct Out<'a> {
    port: &'a str,
    comb: &'a str,
    width: &'a str,
    signed: bool,
}

/// Register chain of depth `depth` from each `comb` signal to its port.
fn pipeline(depth: &str, outs: &[Out]) -> String {
    let mut s = String::new();
    for o in outs {
        let sg = if o.signed { "signed " } else { "" };
        writeln!(s, "    reg {sg}[{}-1:0] {}_pipe [0:{depth}-1];", o.width, o.port).unwrap();
    }
    s.push_str("    integer p;\n    always @(posedge clk) begin\n        if (rst) begin\n");
    s.push_str(&format!("            for (p = 0; p < {depth}; p = p + 1) begin\n"));
    for o in outs {
        writeln!(s, "                {}_pipe[p] <= 0;", o.port).unwrap();
    }
    s.push_str("            end\n        end else begin\n");
    for o in outs {
        writeln!(s, "            {}_pipe[0] <= {};", o.port, o.comb).unwrap();
    }
    s.push_str(&format!("            for (p = 1; p < {depth}; p = p + 1) begin\n"));
    for o in outs {
        writeln!(s, "                {0}_pipe[p] <= {0}_pipe[p - 1];", o.port).unwrap();
    }
    s.push_str("            end\n        end\n    end\n");
    for o in outs {
        writeln!(s, "    assign {0} = {0}_pipe[{depth} - 1];", o.port).unwrap();
    }
    s
}

fn q(port: &'static str, comb: &'static str) -> Out<'static> {
    Out {
        port,
        comb,
        width: "32",
        signed: true,
    }
}

fn binary(name: &str, doc: &str, body: &str) -> String {
    format!(
        "// {doc}
module {name} #(parameter LATENCY = 1) (
    input clk,
    input rst,
    input signed [31:0] a,
    input signed [31:0] b,
    output signed [31:0] res
);
{body}{}endmodule
",
        pipeline("LATENCY", &[q("res", "comb")])
    )
}

fn unary(name: &str, doc: &str, body: &str) -> String {
    format!(
        "// {doc}
module {name} #(parameter LATENCY = 1) (
    input clk,
    input rst,
    input signed [31:0] a,
    output signed [31:0] res
);
{body}{}endmodule
",
        pipeline("LATENCY", &[q("res", "comb")])
    )
}

const POWER_BODY: &str = "    // exponent is the integer part of b, in [-128, 127]
    wire signed [7:0] e = b[23:16];
    wire [7:0] mag = e[7] ? -e : e;
    reg signed [63:0] base;
    reg signed [63:0] acc;
    reg signed [127:0] wide;
    reg signed [31:0] comb;
    integer k;
    always @* begin
        base = a;
        base = base <<< 16;
        acc = 64'sh0000000100000000;
        for (k = 0; k < 8; k = k + 1) begin
            if (mag[k]) begin
                wide = acc * base;
                acc = wide[95:32];
            end
            wide = base * base;
            base = wide[95:32];
        end
        if (e[7]) begin
            if (acc == 0) begin
                acc = 64'sh7fffffffffffffff;
            end else begin
                wide = (128'sd1 <<< 64) / acc;
                acc = wide[63:0];
            end
        end
        comb = acc[47:16];
    end
";

const SQRT_BODY: &str = "    // digit-by-digit root of the raw value gives Q8.8
    reg [31:0] rem;
    reg [31:0] root;
    reg [31:0] one;
    reg signed [31:0] comb;
    integer k;
    always @* begin
        rem = a;
        root = 0;
        one = 32'h40000000;
        for (k = 0; k < 16; k = k + 1) begin
            if (rem >= root + one) begin
                rem = rem - (root + one);
                root = (root >> 1) + one;
            end else begin
                root = root >> 1;
            end
            one = one >> 2;
        end
        comb = a[31] ? 32'sd0 : {root[23:0], 8'b0};
    end
";

/// atan(2^-i) in Q3.29.
pub(crate) const ATAN_Q29: [i64; 30] = [
    421657428, 248918915, 131521918, 66762579, 33510843, 16771758, 8387925, 4194219, 2097141, 1048575, 524288, 262144,
    131072, 65536, 32768, 16384, 8192, 4096, 2048, 1024, 512, 256, 128, 64, 32, 16, 8, 4, 2, 1,
];
/// CORDIC gain compensation in Q3.29.
pub(crate) const CORDIC_K_Q29: i64 = 326016437;
/// 2/pi in Q.30 and pi/2 in Q.61 for quadrant reduction.
pub(crate) const INV_HALF_PI_Q30: i64 = 683565276;
pub(crate) const HALF_PI_Q61: i128 = 3622009729038561421;

fn sincostan() -> String {
    let mut atan = String::new();
    for (i, v) in ATAN_Q29.iter().enumerate() {
        writeln!(atan, "                {i}: atan_q29 = 32'sd{v};").unwrap();
    }
    format!(
        "// sin, cos and tan by rotation-mode CORDIC in Q3.29 after reduction
// to [-pi/4, pi/4]; tan is the Q3.29 quotient.
module SinCosTan_V #(parameter LATENCY = 1) (
    input clk,
    input rst,
    input signed [31:0] a,
    output signed [31:0] sin_res,
    output signed [31:0] cos_res,
    output signed [31:0] tan_res
);
    function signed [31:0] atan_q29;
        input integer n;
        begin
            case (n)
{atan}                default: atan_q29 = 32'sd0;
            endcase
        end
    endfunction

    reg signed [63:0] kw;
    reg signed [79:0] k;
    reg signed [79:0] ax;
    reg signed [79:0] r;
    reg signed [31:0] x;
    reg signed [31:0] y;
    reg signed [31:0] z;
    reg signed [31:0] xs;
    reg signed [31:0] ys;
    reg signed [31:0] s29;
    reg signed [31:0] c29;
    reg signed [63:0] s64;
    reg signed [63:0] t64;
    reg signed [31:0] sin_c;
    reg signed [31:0] cos_c;
    reg signed [31:0] tan_c;
    integer i;
    always @* begin
        // nearest multiple of pi/2
        kw = a * 64'sd{INV_HALF_PI_Q30};
        kw = (kw + 64'sd35184372088832) >>> 46;
        k = kw;
        ax = a;
        r = (ax <<< 45) - k * 80'sd{HALF_PI_Q61};
        z = (r + 80'sd2147483648) >>> 32;
        x = 32'sd{CORDIC_K_Q29};
        y = 32'sd0;
        for (i = 0; i < 30; i = i + 1) begin
            xs = x >>> i;
            ys = y >>> i;
            if (z >= 0) begin
                x = x - ys;
                y = y + xs;
                z = z - atan_q29(i);
            end else begin
                x = x + ys;
                y = y - xs;
                z = z + atan_q29(i);
            end
        end
        case (k[1:0])
            2'd0: begin s29 = y; c29 = x; end
            2'd1: begin s29 = x; c29 = -y; end
            2'd2: begin s29 = -y; c29 = -x; end
            default: begin s29 = -x; c29 = y; end
        endcase
        sin_c = s29 >>> 13;
        cos_c = c29 >>> 13;
        if (c29 == 0) begin
            tan_c = s29[31] ? 32'sh80000000 : 32'sh7fffffff;
        end else begin
            s64 = s29;
            t64 = (s64 <<< 16) / c29;
            if (t64 > 64'sh000000007fffffff) tan_c = 32'sh7fffffff;
            else if (t64 < -64'sh0000000080000000) tan_c = 32'sh80000000;
            else tan_c = t64[31:0];
        end
    end
{}endmodule
",
        pipeline(
            "LATENCY",
            &[q("sin_res", "sin_c"), q("cos_res", "cos_c"), q("tan_res", "tan_c")]
        )
    )
}

const LOG_BODY: &str = "    // log2 by normalisation and repeated squaring, 30 fraction bits
    function signed [47:0] log2_q30;
        input [31:0] v;
        reg [31:0] m;
        reg [63:0] sq;
        integer msb;
        integer j;
        begin
            msb = 0;
            for (j = 0; j < 32; j = j + 1) begin
                if (v[j]) msb = j;
            end
            m = v << (31 - msb);
            log2_q30 = msb - 16;
            log2_q30 = log2_q30 <<< 30;
            for (j = 29; j >= 0; j = j - 1) begin
                sq = m * m;
                if (sq[63]) begin
                    m = sq[63:32];
                    log2_q30 = log2_q30 + (48'sd1 <<< j);
                end else begin
                    m = sq[62:31];
                end
            end
        end
    endfunction

    // log base a of b; an invalid base or argument gives 0
    reg signed [63:0] la;
    reg signed [63:0] lb;
    reg signed [63:0] quo;
    reg signed [31:0] comb;
    always @* begin
        la = log2_q30(a);
        lb = log2_q30(b);
        if (a <= 0 || a == 32'sh00010000 || b <= 0) begin
            comb = 32'sd0;
        end else begin
            quo = (lb <<< 16) / la;
            if (quo > 64'sh000000007fffffff) comb = 32'sh7fffffff;
            else if (quo < -64'sh0000000080000000) comb = 32'sh80000000;
            else comb = quo[31:0];
        end
    end
";

fn compare() -> String {
    format!(
        "// Signed comparison. OP: 0 >, 1 <, 2 >=, 3 <=, 4 ==, 5 !=.
module Compare_V #(parameter OP = 0, parameter LATENCY = 1) (
    input clk,
    input rst,
    input signed [31:0] a,
    input signed [31:0] b,
    output res
);
    reg comb;
    always @* begin
        case (OP)
            0: comb = a > b;
            1: comb = a < b;
            2: comb = a >= b;
            3: comb = a <= b;
            4: comb = a == b;
            default: comb = a != b;
        endcase
    end
{}endmodule
",
        pipeline(
            "LATENCY",
            &[Out {
                port: "res",
                comb: "comb",
                width: "1",
                signed: false
            }]
        )
    )
}

fn merge() -> String {
    format!(
        "// Selects the if-branch value when sel is set.
module Merge_V #(parameter LATENCY = 1) (
    input clk,
    input rst,
    input signed [31:0] a_if,
    input signed [31:0] a_else,
    input sel,
    output signed [31:0] res
);
    wire signed [31:0] comb = sel ? a_if : a_else;
{}endmodule
",
        pipeline("LATENCY", &[q("res", "comb")])
    )
}

fn delay() -> String {
    format!(
        "// Shift register of STAGES stages.
module Delay_V #(parameter STAGES = 1, parameter WIDTH = 32) (
    input clk,
    input rst,
    input [WIDTH-1:0] d,
    output [WIDTH-1:0] q
);
{}endmodule
",
        pipeline(
            "STAGES",
            &[Out {
                port: "q",
                comb: "d",
                width: "WIDTH",
                signed: false
            }]
        )
    )
}

/// One file per library module, named `<module>.v`.
pub fn emit_function_library() -> Vec<VerilogFile> {
    let texts = [
        binary(
            "Addition_V",
            "Q16.16 addition, wraps on overflow.",
            "    wire signed [31:0] comb = a + b;\n",
        ),
        binary(
            "Subtraction_V",
            "Q16.16 subtraction, wraps on overflow.",
            "    wire signed [31:0] comb = a - b;\n",
        ),
        binary(
            "Multiplication_V",
            "Q16.16 product: 64-bit signed product shifted right 16, low 32 bits kept.",
            "    wire signed [63:0] prod = a * b;\n    wire signed [31:0] comb = prod[47:16];\n",
        ),
        binary(
            "Division_V",
            "Q16.16 quotient (a << 16) / b truncated toward zero; b == 0 saturates.",
            "    wire signed [63:0] num = {{16{a[31]}}, a, 16'b0};
    wire signed [63:0] den = b;
    wire signed [63:0] quo = num / den;
    wire signed [31:0] comb = (b == 0) ? (a[31] ? 32'sh80000000 : 32'sh7fffffff) : quo[31:0];
",
        ),
        binary("Power_V", "a to an integer power by squaring in Q32.32.", POWER_BODY),
        binary("Logarithm_V", "Logarithm of b in base a.", LOG_BODY),
        unary("Sqrt_V", "Square root; negative input gives 0.", SQRT_BODY),
        sincostan(),
        unary("Value_V", "Registered copy.", "    wire signed [31:0] comb = a;\n"),
        compare(),
        merge(),
        delay(),
    ];
    LIBRARY_MODULES
        .iter()
        .zip(texts)
        .map(|(name, body)| VerilogFile {
            name: format!("{name}.v"),
            text: format!("// SPDX-License-Identifier: Apache-2.0\n{body}"),
        })
        .collect()
}

/// Bit-level models of the transcendental bodies above, used to check the
/// hardware algorithms against the golden semantics.
#[cfg(test)]
pub(crate) mod models {
    use super::*;

    pub fn sin_cos_tan(a: i32) -> (i32, i32, i32) {
        let kw = ((a as i64) * INV_HALF_PI_Q30 + (1i64 << 45)) >> 46;
        let r = ((a as i128) << 45) - (kw as i128) * HALF_PI_Q61;
        let mut z = ((r + (1i128 << 31)) >> 32) as i32;
        let (mut x, mut y) = (CORDIC_K_Q29 as i32, 0i32);
        for (i, at) in ATAN_Q29.iter().enumerate() {
            let (xs, ys) = (x >> i, y >> i);
            if z >= 0 {
                x = x.wrapping_sub(ys);
                y = y.wrapping_add(xs);
                z = z.wrapping_sub(*at as i32);
            } else {
                x = x.wrapping_add(ys);
                y = y.wrapping_sub(xs);
                z = z.wrapping_add(*at as i32);
            }
        }
        let (s, c) = match kw & 3 {
            0 => (y, x),
            1 => (x, -y),
            2 => (-y, -x),
            _ => (-x, y),
        };
        let t = if c == 0 {
            if s < 0 {
                i32::MIN
            } else {
                i32::MAX
            }
        } else {
            (((s as i64) << 16) / c as i64).clamp(i32::MIN as i64, i32::MAX as i64) as i32
        };
        (s >> 13, c >> 13, t)
    }

    pub fn sqrt(a: i32) -> i32 {
        if a < 0 {
            return 0;
        }
        let (mut rem, mut root, mut one) = (a as u32, 0u32, 1u32 << 30);
        for _ in 0..16 {
            if rem >= root + one {
                rem -= root + one;
                root = (root >> 1) + one;
            } else {
                root >>= 1;
            }
            one >>= 2;
        }
        (root << 8) as i32
    }

    fn log2_q30(v: u32) -> i64 {
        let msb = 31 - v.leading_zeros() as i64;
        let mut m = v << (31 - msb) as u32;
        let mut l = (msb - 16) << 30;
        for j in (0..30).rev() {
            let sq = (m as u64) * (m as u64);
            if sq >> 63 == 1 {
                m = (sq >> 32) as u32;
                l += 1 << j;
            } else {
                m = (sq >> 31) as u32;
            }
        }
        l
    }

    pub fn log(base: i32, arg: i32) -> i32 {
        if base <= 0 || base == 1 << 16 || arg <= 0 {
            return 0;
        }
        let q = (log2_q30(arg as u32) << 16) / log2_q30(base as u32);
        q.clamp(i32::MIN as i64, i32::MAX as i64) as i32
    }
}
