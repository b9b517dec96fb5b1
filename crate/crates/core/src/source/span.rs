use std::fmt;

/// Opaque handle for an input file. The analyzer maps it back to a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FileId(pub u32);

/// Location of a token or node inside a source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    pub file_id: FileId,
    /// 1-based.
    pub line: u32,
    /// 1-based, counted in bytes.
    pub column: u32,
    pub byte_offset: usize,
    pub length: usize,
}

impl Span {
    pub fn new(file_id: FileId, line: u32, column: u32, byte_offset: usize, length: usize) -> Self {
        Span {
            file_id,
            line,
            column,
            byte_offset,
            length,
        }
    }

    pub fn end(&self) -> usize {
        self.byte_offset + self.length
    }

    /// Smallest span starting at `self` and ending at the end of `other`.
    pub fn to(&self, other: Span) -> Span {
        let end = other.end().max(self.end());
        Span {
            length: end - self.byte_offset,
            ..*self
        }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.byte_offset <= other.byte_offset && other.end() <= self.end()
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}
