package org.joda.time.tz;

import java.util.ArrayList;
import java.util.List;

import org.joda.time.DateTimeZone;

public class DateTimeZoneBuilder {

    private final List<Transition> iTransitions = new ArrayList<Transition>();

    public DateTimeZoneBuilder addTransition(long millis, int wallOffset, int standardOffset) {
        iTransitions.add(new Transition(millis, wallOffset, standardOffset));
        return this;
    }

    public DateTimeZone toDateTimeZone(String id) {
        if (iTransitions.isEmpty()) {
            return new FixedDateTimeZone(id, id, 0, 0);
        }
        long[] trans = new long[iTransitions.size()];
        int[] wallOffsets = new int[trans.length];
        int[] standardOffsets = new int[trans.length];
        for (int i = 0; i < trans.length; i++) {
            Transition t = iTransitions.get(i);
            trans[i] = t.iMillis;
            wallOffsets[i] = t.iWallOffset;
            standardOffsets[i] = t.iStandardOffset;
        }
        return CachedDateTimeZone.forZone(new PrecalculatedZone(id, trans, wallOffsets, standardOffsets));
    }

    private static final class Transition {
        final long iMillis;
        final int iWallOffset;
        final int iStandardOffset;

        Transition(long millis, int wallOffset, int standardOffset) {
            iMillis = millis;
            iWallOffset = wallOffset;
            iStandardOffset = standardOffset;
        }
    }

    static final class PrecalculatedZone extends DateTimeZone {

        private final long[] iTransitions;
        private final int[] iWallOffsets;
        private final int[] iStandardOffsets;

        PrecalculatedZone(String id, long[] transitions, int[] wallOffsets, int[] standardOffsets) {
            super(id);
            iTransitions = transitions;
            iWallOffsets = wallOffsets;
            iStandardOffsets = standardOffsets;
        }

        public int getOffset(long instant) {
            long[] transitions = iTransitions;
            int i = java.util.Arrays.binarySearch(transitions, instant);
            if (i >= 0) {
                return iWallOffsets[i];
            }
            i = ~i;
            return i > 0 ? iWallOffsets[i - 1] : 0;
        }

        public int getStandardOffset(long instant) {
            int i = java.util.Arrays.binarySearch(iTransitions, instant);
            i = i >= 0 ? i : ~i - 1;
            return i >= 0 ? iStandardOffsets[i] : 0;
        }

        public boolean isFixed() {
            return false;
        }

        public long nextTransition(long instant) {
            int i = java.util.Arrays.binarySearch(iTransitions, instant);
            i = (i >= 0) ? (i + 1) : ~i;
            return i < iTransitions.length ? iTransitions[i] : instant;
        }

        public long previousTransition(long instant) {
            int i = java.util.Arrays.binarySearch(iTransitions, instant);
            i = (i >= 0) ? (i - 1) : (~i - 1);
            return i >= 0 ? iTransitions[i] : instant;
        }
    }
}
