import java.util.HashMap;
import java.util.Map;

public class MostFrequent {
    public static int main(String[] args) {
        int[] nums = {4, 1, 4, 2, 1, 4};
        Map<Integer, Integer> freq = new HashMap<>();
        for (int x : nums) {
            freq.put(x, freq.getOrDefault(x, 0) + 1);
        }
        int best = -1;
        int bestCount = 0;
        for (int key : freq.keySet()) {
            int c = freq.get(key);
            if (c > bestCount) {
                best = key;
                bestCount = c;
            }
        }
        return best;
    }
}
