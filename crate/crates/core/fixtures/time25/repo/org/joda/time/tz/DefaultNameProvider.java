package org.joda.time.tz;

import java.util.HashMap;
import java.util.Locale;
import java.util.Map;

/**
 * The default name provider acquires localized names from the JDK.
 */
public class DefaultNameProvider {

    private final Map<Locale, Map<String, String[]>> iByLocaleCache = new HashMap<Locale, Map<String, String[]>>();

    public DefaultNameProvider() {
    }

    public String getShortName(Locale locale, String id, String nameKey) {
        String[] nameSet = getNameSet(locale, id, nameKey);
        return nameSet == null ? null : nameSet[0];
    }

    public String getName(Locale locale, String id, String nameKey) {
        String[] nameSet = getNameSet(locale, id, nameKey);
        return nameSet == null ? null : nameSet[1];
    }

    private synchronized String[] getNameSet(Locale locale, String id, String nameKey) {
        if (locale == null || id == null || nameKey == null) {
            return null;
        }
        Map<String, String[]> byIdCache = iByLocaleCache.get(locale);
        if (byIdCache == null) {
            byIdCache = new HashMap<String, String[]>();
            iByLocaleCache.put(locale, byIdCache);
        }
        return byIdCache.get(id);
    }
}
