//! Minimal protobuf wire-format primitives for the model container format.
//!
//! Only what the model reader/writer needs: varints, tags and
//! length-delimited fields. Unknown fields are skippable so third-party
//! files with extra metadata still load.

use crate::error::{Error, Result};

pub const WIRE_VARINT: u32 = 0;
pub const WIRE_I64: u32 = 1;
pub const WIRE_LEN: u32 = 2;
pub const WIRE_I32: u32 = 5;

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    /// Offset of `buf[0]` in the outermost message, for error reporting.
    base: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader {
            buf,
            pos: 0,
            base: 0,
        }
    }

    fn sub(&self, buf: &'a [u8], at: usize) -> Reader<'a> {
        Reader {
            buf,
            pos: 0,
            base: self.base + at,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pos >= self.buf.len()
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::OnnxDecode {
            offset: self.base + self.pos,
            msg: msg.into(),
        }
    }

    pub fn read_varint(&mut self) -> Result<u64> {
        let mut value = 0u64;
        let mut shift = 0u32;
        loop {
            let byte = *self
                .buf
                .get(self.pos)
                .ok_or_else(|| self.err("truncated varint"))?;
            self.pos += 1;
            if shift >= 64 {
                return Err(self.err("varint overflows 64 bits"));
            }
            value |= u64::from(byte & 0x7f) << shift;
            if byte & 0x80 == 0 {
                return Ok(value);
            }
            shift += 7;
        }
    }

    /// Next `(field_number, wire_type)` pair.
    pub fn read_tag(&mut self) -> Result<(u32, u32)> {
        let tag = self.read_varint()?;
        let field = (tag >> 3) as u32;
        let wire = (tag & 0x7) as u32;
        if field == 0 {
            return Err(self.err("field number 0"));
        }
        Ok((field, wire))
    }

    pub fn read_bytes(&mut self) -> Result<&'a [u8]> {
        let len = self.read_varint()? as usize;
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| self.err("length-delimited field past end of buffer"))?;
        let slice = &self.buf[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    pub fn read_string(&mut self) -> Result<String> {
        let bytes = self.read_bytes()?;
        String::from_utf8(bytes.to_vec()).map_err(|_| self.err("invalid utf-8 string"))
    }

    /// Sub-reader over a length-delimited message.
    pub fn read_message(&mut self) -> Result<Reader<'a>> {
        let at = self.pos;
        let bytes = self.read_bytes()?;
        Ok(self.sub(bytes, at))
    }

    pub fn read_f32(&mut self) -> Result<f32> {
        if self.pos + 4 > self.buf.len() {
            return Err(self.err("truncated 32-bit value"));
        }
        let v = f32::from_le_bytes(self.buf[self.pos..self.pos + 4].try_into().unwrap());
        self.pos += 4;
        Ok(v)
    }

    pub fn read_f64(&mut self) -> Result<f64> {
        if self.pos + 8 > self.buf.len() {
            return Err(self.err("truncated 64-bit value"));
        }
        let v = f64::from_le_bytes(self.buf[self.pos..self.pos + 8].try_into().unwrap());
        self.pos += 8;
        Ok(v)
    }

    pub fn skip(&mut self, wire: u32) -> Result<()> {
        match wire {
            WIRE_VARINT => {
                self.read_varint()?;
            }
            WIRE_I64 => {
                self.read_f64()?;
            }
            WIRE_LEN => {
                self.read_bytes()?;
            }
            WIRE_I32 => {
                self.read_f32()?;
            }
            other => return Err(self.err(format!("unsupported wire type {other}"))),
        }
        Ok(())
    }

    /// Packed or singular repeated varints.
    pub fn read_packed_varints(&mut self, wire: u32, out: &mut Vec<i64>) -> Result<()> {
        if wire == WIRE_LEN {
            let mut inner = self.read_message()?;
            while !inner.is_empty() {
                out.push(inner.read_varint()? as i64);
            }
        } else {
            out.push(self.read_varint()? as i64);
        }
        Ok(())
    }

    /// Packed or singular repeated 32-bit floats.
    pub fn read_packed_f32(&mut self, wire: u32, out: &mut Vec<f32>) -> Result<()> {
        if wire == WIRE_LEN {
            let mut inner = self.read_message()?;
            while !inner.is_empty() {
                out.push(inner.read_f32()?);
            }
        } else {
            out.push(self.read_f32()?);
        }
        Ok(())
    }
}

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Writer::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn write_varint(&mut self, mut value: u64) {
        loop {
            let byte = (value & 0x7f) as u8;
            value >>= 7;
            if value == 0 {
                self.buf.push(byte);
                return;
            }
            self.buf.push(byte | 0x80);
        }
    }

    fn write_tag(&mut self, field: u32, wire: u32) {
        self.write_varint(u64::from(field) << 3 | u64::from(wire));
    }

    pub fn field_varint(&mut self, field: u32, value: u64) {
        self.write_tag(field, WIRE_VARINT);
        self.write_varint(value);
    }

    pub fn field_i64(&mut self, field: u32, value: i64) {
        // two's complement varint, 10 bytes when negative
        self.field_varint(field, value as u64);
    }

    pub fn field_bytes(&mut self, field: u32, bytes: &[u8]) {
        self.write_tag(field, WIRE_LEN);
        self.write_varint(bytes.len() as u64);
        self.buf.extend_from_slice(bytes);
    }

    pub fn field_string(&mut self, field: u32, s: &str) {
        self.field_bytes(field, s.as_bytes());
    }

    pub fn field_message(&mut self, field: u32, message: Writer) {
        self.field_bytes(field, &message.buf);
    }

    /// Raw pre-encoded submessage, re-emitted verbatim.
    pub fn field_raw_message(&mut self, field: u32, bytes: &[u8]) {
        self.field_bytes(field, bytes);
    }

    pub fn field_f32(&mut self, field: u32, value: f32) {
        self.write_tag(field, WIRE_I32);
        self.buf.extend_from_slice(&value.to_le_bytes());
    }

    pub fn field_packed_i64(&mut self, field: u32, values: &[i64]) {
        if values.is_empty() {
            return;
        }
        let mut inner = Writer::new();
        for &v in values {
            inner.write_varint(v as u64);
        }
        self.field_bytes(field, &inner.buf);
    }
}
