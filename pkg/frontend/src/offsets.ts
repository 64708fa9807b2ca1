/**
 * Offset arithmetic between the DOM and the raw context string.
 *
 * The server counts answer offsets in Unicode code points; JavaScript
 * strings index UTF-16 code units. All conversions here go through the raw
 * context string, never through rendered-node offsets, so highlight and
 * selection positions cannot drift from what the server validates.
 */

const TEXT_NODE = 3;
const ELEMENT_NODE = 1;

/** Structural subset of DOM Node, so the walking logic is testable
 * without a browser. */
export interface TextishNode {
  nodeType: number;
  textContent: string | null;
  previousSibling: TextishNode | null;
  parentNode: TextishNode | null;
  childNodes: ArrayLike<TextishNode>;
}

export interface RangeLike {
  startContainer: TextishNode;
  startOffset: number;
  endContainer: TextishNode;
  endOffset: number;
}

/** A candidate span in code points over the raw context string. */
export interface SpanSelection {
  text: string;
  start: number;
}

export const codePointLength = (text: string): number => {
  let count = 0;
  for (const _ of text) count += 1;
  return count;
};

/** Code points preceding the given UTF-16 index. */
export const utf16ToCodePoint = (text: string, utf16Index: number): number => {
  let points = 0;
  let i = 0;
  while (i < utf16Index && i < text.length) {
    const code = text.codePointAt(i);
    i += code !== undefined && code > 0xffff ? 2 : 1;
    points += 1;
  }
  return points;
};

/** UTF-16 index of the given code-point index. */
export const codePointToUtf16 = (text: string, codePointIndex: number): number => {
  let i = 0;
  for (let seen = 0; seen < codePointIndex && i < text.length; seen += 1) {
    const code = text.codePointAt(i);
    i += code !== undefined && code > 0xffff ? 2 : 1;
  }
  return i;
};

export const codePointSlice = (
  text: string,
  start: number,
  length: number
): string =>
  text.slice(codePointToUtf16(text, start), codePointToUtf16(text, start + length));

const nodeTextLength = (node: TextishNode): number =>
  node.nodeType === TEXT_NODE || node.nodeType === ELEMENT_NODE
    ? (node.textContent ?? "").length
    : 0;

/** For element containers the DOM offset counts children, not characters. */
const utf16OffsetInsideNode = (node: TextishNode, offset: number): number => {
  if (node.nodeType === TEXT_NODE) {
    return offset;
  }
  let total = 0;
  for (let i = 0; i < offset && i < node.childNodes.length; i += 1) {
    const child = node.childNodes[i];
    if (child) {
      total += nodeTextLength(child);
    }
  }
  return total;
};

/**
 * UTF-16 position of (node, offset) from the start of root's text content.
 * Throws when the node is not inside root.
 */
export const utf16PositionInRoot = (
  root: TextishNode,
  node: TextishNode,
  offsetInNode: number
): number => {
  let position = utf16OffsetInsideNode(node, offsetInNode);
  let current = node;
  while (current !== root) {
    let sibling = current.previousSibling;
    while (sibling) {
      position += nodeTextLength(sibling);
      sibling = sibling.previousSibling;
    }
    if (!current.parentNode) {
      throw new Error("selection is outside the context element");
    }
    current = current.parentNode;
  }
  return position;
};

/**
 * Map a DOM range inside the context element to (text, code-point start)
 * against the raw context string. Returns null for collapsed selections or
 * selections that leave the context element. The returned text is sliced
 * from the context string itself, so it always satisfies the substring
 * check the server will re-run.
 */
export const rangeToSpan = (
  root: TextishNode,
  contextText: string,
  range: RangeLike
): SpanSelection | null => {
  let startU: number;
  let endU: number;
  try {
    startU = utf16PositionInRoot(
      root,
      range.startContainer,
      range.startOffset
    );
    endU = utf16PositionInRoot(root, range.endContainer, range.endOffset);
  } catch {
    return null;
  }
  if (endU < startU) {
    [startU, endU] = [endU, startU];
  }
  if (startU === endU) {
    return null;
  }
  return {
    text: contextText.slice(startU, endU),
    start: utf16ToCodePoint(contextText, startU),
  };
};

/** Drop surrounding whitespace, keeping the start offset in sync.
 * Whitespace is always one code point, so counting characters is safe. */
export const trimSpan = (span: SpanSelection): SpanSelection | null => {
  const leading = span.text.length - span.text.trimStart().length;
  const text = span.text.trim();
  if (!text) {
    return null;
  }
  return { text, start: span.start + leading };
};
