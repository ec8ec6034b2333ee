#!/usr/bin/env python3
"""Counter-mode draw streams: rollback is just restoring an integer.

The value at cursor i is a pure function of (stream key, i). Nothing else is
stored, so undoing three draws means setting the cursor back by three, and
replaying gives bit-identical values. This is what lets the optimistic kernel
roll an LP back without keeping draw logs.
"""

from tiewarp.rngstream import DrawStream, Purpose, draw_at, draws_array

stream = DrawStream.for_lp(global_seed=42, lp_id=7, purpose=Purpose.TIEBREAK)

first = [stream.draw() for _ in range(4)]
print("draws 0..3:", [hex(v)[:10] for v in first])

mark = stream.snapshot()            # an int, nothing more
print("snapshot:", mark)

later = [stream.draw() for _ in range(3)]
print("draws 4..6:", [hex(v)[:10] for v in later])

stream.restore(mark)                # rollback
replayed = [stream.draw() for _ in range(3)]
print("replayed 4..6:", [hex(v)[:10] for v in replayed])
assert replayed == later, "replay must be bit-identical"

# random access works without any stream object at all
print("draw_at(key, 5) ==", hex(draw_at(stream.key, 5))[:10])
assert draw_at(stream.key, 5) == later[1]

# and the vectorized form matches the scalar loop bit for bit
vec = draws_array(stream.key, 0, 7)
assert vec.tolist() == first + later
print("vectorized == scalar for", len(vec), "draws")

# separate purposes give unrelated streams for the same LP and seed
model = DrawStream.for_lp(global_seed=42, lp_id=7, purpose=Purpose.MODEL)
print("same lp, model stream:", [hex(model.draw())[:10] for _ in range(2)])
